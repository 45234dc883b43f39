#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "titerlab/grid.hpp"
#include "titerlab/model.hpp"
#include "titerlab/rng.hpp"
#include "titerlab/trajectory.hpp"
#include "titerlab/util.hpp"

namespace titerlab {

// Initial law of the process: point mass, uniform on an interval, or a
// piecewise-constant density on a grid.
class InitialDistribution {
public:
  enum class Kind { PointMass, Uniform, GridDensity };

  static InitialDistribution point_mass(double x0) {
    if (!(x0 >= 0)) throw std::invalid_argument("initial: point mass must be >= 0");
    InitialDistribution d(Kind::PointMass);
    d.a_ = d.b_ = x0;
    return d;
  }

  static InitialDistribution uniform(double a, double b) {
    if (!(a >= 0) || !(b > a))
      throw std::invalid_argument("initial: uniform needs 0 <= a < b");
    InitialDistribution d(Kind::Uniform);
    d.a_ = a;
    d.b_ = b;
    return d;
  }

  static InitialDistribution grid_density(DensityVector f) {
    if (f.escaped != 0)
      throw std::invalid_argument("initial: grid density cannot carry escaped mass");
    InitialDistribution d(Kind::GridDensity);
    const int n = f.grid.n_cells();
    d.cum_.resize(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
      if (f.values[i] < 0) throw std::invalid_argument("initial: negative density");
      d.cum_[i + 1] = d.cum_[i] + f.values[i] * f.grid.dx();
    }
    const double total = d.cum_[n];
    if (!(total > 0)) throw std::invalid_argument("initial: zero-mass density");
    for (auto& c : d.cum_) c /= total;
    d.density_ = std::move(f);
    for (int i = 0; i < n; ++i) {
      if (d.density_->values[i] > 0) {
        d.a_ = d.density_->grid.left(i);
        break;
      }
    }
    for (int i = n - 1; i >= 0; --i) {
      if (d.density_->values[i] > 0) {
        d.b_ = d.density_->grid.right(i);
        break;
      }
    }
    return d;
  }

  Kind kind() const { return kind_; }
  double support_lo() const { return a_; }
  double support_hi() const { return b_; }

  double sample(RngStream& rng) const {
    switch (kind_) {
      case Kind::PointMass: return a_;
      case Kind::Uniform: return rng.uniform(a_, b_);
      case Kind::GridDensity: {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
        const int i = std::min<int>(int(it - cum_.begin()) - 1,
                                    density_->grid.n_cells() - 1);
        const double within = (u - cum_[i]) / (cum_[i + 1] - cum_[i]);
        return density_->grid.left(i) + within * density_->grid.dx();
      }
    }
    return a_;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::PointMass: return "point_mass(" + detail::num(a_) + ")";
      case Kind::Uniform:
        return "uniform(" + detail::num(a_) + "," + detail::num(b_) + ")";
      case Kind::GridDensity: return "grid_density";
    }
    return "";
  }

private:
  explicit InitialDistribution(Kind k) : kind_(k) {}

  Kind kind_;
  double a_ = 0, b_ = 0;
  std::vector<double> cum_;
  std::optional<DensityVector> density_;
};

namespace detail {

// State of one fresh path at a single time, consuming draws from rng.
inline double state_at(const ModelSpec& model, double x0, double t, RngStream& rng) {
  double t_cur = 0.0;
  double x = x0;
  for (;;) {
    const double gap = rng.exponential(model.lambda);
    if (t_cur + gap >= t) return model.flow.advance(x, t - t_cur);
    x = model.boost.apply(model.flow.advance(x, gap));
    t_cur += gap;
  }
}

}  // namespace detail

struct HistogramResult {
  DensityVector density;
  std::vector<double> std_error;  // per-cell standard error of the density value
};

// Histogram of n_paths independent copies of the state at time t. Mass beyond
// the grid is recorded in density.escaped, never dropped.
inline HistogramResult ensemble_histogram(const ModelSpec& model,
                                          const InitialDistribution& init, double t,
                                          long n_paths, const Grid& grid,
                                          std::uint64_t master_seed) {
  if (n_paths < 1) throw std::invalid_argument("histogram: need n_paths >= 1");
  if (!(t >= 0)) throw std::invalid_argument("histogram: need t >= 0");
  std::vector<long> counts(grid.n_cells(), 0);
  long out = 0;
  for (long p = 0; p < n_paths; ++p) {
    RngStream rng = RngStream::derive(master_seed, std::uint64_t(p));
    const double x0 = init.sample(rng);
    const double x = t == 0 ? x0 : detail::state_at(model, x0, t, rng);
    const int c = grid.cell_of(x);
    if (c >= grid.n_cells())
      ++out;
    else
      ++counts[c];
  }
  HistogramResult h{DensityVector(grid), std::vector<double>(grid.n_cells(), 0.0)};
  const double N = double(n_paths);
  for (int i = 0; i < grid.n_cells(); ++i) {
    const double p = counts[i] / N;
    h.density.values[i] = p / grid.dx();
    h.std_error[i] = std::sqrt(p * (1 - p) / N) / grid.dx();
  }
  h.density.escaped = out / N;
  return h;
}

struct MomentPoint {
  double t;
  double value;
  double std_error;
};

// Monte Carlo estimate of E[X_t^(-gamma)] along a time schedule. The initial
// law must be supported away from 0 or the moment need not exist at t=0.
inline std::vector<MomentPoint> negative_moment_series(
    const ModelSpec& model, const InitialDistribution& init, double gamma,
    const std::vector<double>& times, long n_paths, std::uint64_t master_seed) {
  if (!(gamma >= 0)) throw std::invalid_argument("negative moment: gamma must be >= 0");
  if (!(init.support_lo() > 0))
    throw std::invalid_argument(
        "negative moment: initial support must stay away from 0");
  if (times.empty() || !std::is_sorted(times.begin(), times.end()) || times.front() < 0)
    throw std::invalid_argument("negative moment: times must be sorted and >= 0");
  if (n_paths < 2) throw std::invalid_argument("negative moment: need n_paths >= 2");

  const std::size_t m = times.size();
  std::vector<double> sum(m, 0.0), sumsq(m, 0.0);
  for (long p = 0; p < n_paths; ++p) {
    RngStream rng = RngStream::derive(master_seed, std::uint64_t(p));
    const double x0 = init.sample(rng);
    std::size_t k = 0;
    detail::walk_path(model, x0, times.back() + 1e-12, rng,
                      [&](double t_seg, double x_seg, double len) {
                        while (k < m && times[k] < t_seg + len) {
                          const double x =
                              model.flow.advance(x_seg, times[k] - t_seg);
                          const double v = std::pow(x, -gamma);
                          sum[k] += v;
                          sumsq[k] += v * v;
                          ++k;
                        }
                      });
  }
  std::vector<MomentPoint> out(m);
  const double N = double(n_paths);
  for (std::size_t k = 0; k < m; ++k) {
    const double mean = sum[k] / N;
    const double var = std::max(sumsq[k] / N - mean * mean, 0.0);
    out[k] = {times[k], mean, std::sqrt(var / N)};
  }
  return out;
}

// Path functional to time-average.
class Observable {
public:
  static Observable monomial(int degree) {
    if (degree < 0) throw std::invalid_argument("observable: degree must be >= 0");
    Observable o;
    o.degree_ = degree;
    return o;
  }

  static Observable function(std::function<double(double)> fn) {
    if (!fn) throw std::invalid_argument("observable: empty function");
    Observable o;
    o.fn_ = std::move(fn);
    return o;
  }

  bool is_monomial() const { return !fn_; }
  int degree() const { return degree_; }
  double operator()(double x) const {
    return fn_ ? fn_(x) : std::pow(x, double(degree_));
  }

private:
  Observable() = default;
  int degree_ = 0;
  std::function<double(double)> fn_;
};

namespace detail {

// 16-point Gauss-Legendre nodes/weights on [-1,1].
inline constexpr double kGL16Node[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
inline constexpr double kGL16Weight[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
    0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

// Integral of obs(state) over local segment times [u0, u1], starting at x.
inline double segment_integral(const ModelSpec& model, double x, double u0, double u1,
                               const Observable& obs) {
  if (!(u1 > u0)) return 0.0;
  if (obs.is_monomial()) {
    const int k = obs.degree();
    if (k == 0) return u1 - u0;
    if (model.flow.family() == FlowFamily::LinearDecay && x > 0) {
      // along the flow x(u) = x e^(-a u): the integrand is x^k e^(-a k u)
      const double ak = model.flow.rate() * k;
      return std::pow(x, k) * (std::exp(-ak * u0) - std::exp(-ak * u1)) / ak;
    }
  }
  const double mid = 0.5 * (u0 + u1), half = 0.5 * (u1 - u0);
  double acc = 0;
  for (int i = 0; i < 16; ++i)
    acc += kGL16Weight[i] * obs(model.flow.advance(x, mid + half * kGL16Node[i]));
  return acc * half;
}

}  // namespace detail

struct ErgodicResult {
  double value;
  double t_effective;
};

// Time average of the observable along one path, discarding [0, t_burnin).
// Per-segment integrals are closed-form for monomials under linear decay and
// Gauss-Legendre quadrature otherwise.
inline ErgodicResult ergodic_average(const ModelSpec& model, double x0, double t_burnin,
                                     double t_total, const Observable& obs,
                                     std::uint64_t seed) {
  if (!(t_total > t_burnin) || !(t_burnin >= 0))
    throw std::invalid_argument("ergodic average: need 0 <= t_burnin < t_total");
  if (!model.phase_space.contains(x0))
    throw std::invalid_argument("ergodic average: x0 outside phase space");
  RngStream rng(seed);
  double acc = 0.0;
  detail::walk_path(model, x0, t_total, rng,
                    [&](double t_seg, double x_seg, double len) {
                      const double u0 = std::max(0.0, t_burnin - t_seg);
                      if (u0 >= len) return;
                      acc += detail::segment_integral(model, x_seg, u0, len, obs);
                    });
  const double span = t_total - t_burnin;
  return {acc / span, span};
}

}  // namespace titerlab

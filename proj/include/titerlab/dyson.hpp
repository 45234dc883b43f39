#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <titerlab/fp_matrix.hpp>
#include <titerlab/grid.hpp>
#include <titerlab/model.hpp>

namespace titerlab {

// Truncated jump expansion of the semigroup:
//
//   U(t) f = e^{-lambda t} sum_n lambda^n S_n(t) f,
//
// where S_0 is the jump-free transport semigroup and S_{n+1}(t) f =
// int_0^t S_0(t-s) [P_Q S_n(s) f] ds.  Term n collects the paths with
// exactly n jumps, so its mass is the Poisson weight e^{-lambda t}
// (lambda t)^n / n!, which makes the truncation error of the partial sum
// exactly the Poisson tail.

struct DysonResult {
  explicit DysonResult(const Grid& g) : partial(g) {}

  DensityVector partial;            // sum of the retained weighted terms
  double tail_bound = 0.0;          // exact L1 mass of the discarded terms
  std::vector<double> term_mass;    // mass of weighted term n, n = 0..N
  std::vector<DensityVector> terms; // the weighted terms themselves
};

namespace detail {

// Jump-free pushforward on the grid for a fixed ladder of time offsets
// d*h.  The backward images of all cell edges are computed once; applying
// the operator is then a row of differences of the piecewise-linear CDF of
// the input.  Mass is conserved exactly: the backward edge images cover
// [0, x_max], and anything pulled back from beyond the grid carries no
// mass.  The escaped component is absorbing (the decay flow moves left, so
// nothing re-enters through x_max).
class TransportTable {
public:
  TransportTable(const FlowModel& flow, const Grid& grid, double h, int m)
      : grid_(grid) {
    const int n = grid.n_cells();
    back_.assign(m + 1, std::vector<double>(n + 1));
    for (int d = 0; d <= m; ++d) {
      auto& row = back_[d];
      double prev = 0.0;
      for (int k = 0; k <= n; ++k) {
        auto b = flow.advance_back(grid.left(k), h * d);
        // ceiling hit means the preimage lies beyond any mass we track
        double xb = b ? *b : std::numeric_limits<double>::infinity();
        if (xb < prev) xb = prev; // guard quadrature jitter
        row[k] = prev = xb;
      }
      row[0] = 0.0; // g(0) = 0, the origin is a fixed point
    }
  }

  void apply(int d, const DensityVector& in, DensityVector& out) const {
    const int n = grid_.n_cells();
    cum_.resize(n + 1);
    cum_[0] = 0.0;
    const double dx = grid_.dx();
    for (int i = 0; i < n; ++i) cum_[i + 1] = cum_[i] + in.values[i] * dx;
    const auto& row = back_[d];
    out.grid = grid_;
    out.values.resize(n);
    double flo = cdf(row[0]);
    for (int j = 0; j < n; ++j) {
      const double fhi = cdf(row[j + 1]);
      out.values[j] = std::max(0.0, fhi - flo) / dx;
      flo = fhi;
    }
    out.escaped = in.escaped;
  }

private:
  double cdf(double x) const {
    const int n = grid_.n_cells();
    if (x <= 0.0) return 0.0;
    if (x >= grid_.x_max()) return cum_[n];
    const double u = x / grid_.dx();
    int k = std::min(static_cast<int>(u), n - 1);
    return cum_[k] + (cum_[k + 1] - cum_[k]) * (u - k);
  }

  Grid grid_;
  std::vector<std::vector<double>> back_;
  mutable std::vector<double> cum_;
};

// Quadrature weights for the prefix integral over [0, j*h] on uniform
// nodes: composite Simpson for even j, Simpson plus a 3/8 closing rule for
// odd j >= 3, trapezoid for j = 1.  All rules integrate cubics exactly
// except the single trapezoid prefix, whose O(h^3) error washes out of the
// final node.
inline std::vector<double> prefix_weights(int j, double h) {
  std::vector<double> w(static_cast<std::size_t>(j) + 1, 0.0);
  if (j == 0) return w;
  if (j == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  const int je = (j % 2 == 0) ? j : j - 3;
  if (je >= 2) {
    w[0] += h / 3.0;
    w[je] += h / 3.0;
    for (int k = 1; k < je; ++k) w[k] += (k % 2 ? 4.0 : 2.0) * h / 3.0;
  }
  if (j % 2) {
    const double c = 3.0 * h / 8.0;
    w[j - 3] += c;
    w[j - 2] += 3.0 * c;
    w[j - 1] += 3.0 * c;
    w[j] += c;
  }
  return w;
}

inline void axpy(double a, const DensityVector& x, DensityVector& y) {
  for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
  y.escaped += a * x.escaped;
}

inline DensityVector zero_like(const Grid& g) { return DensityVector(g); }

} // namespace detail

inline DysonResult dyson_phillips(const ModelSpec& model, const Grid& grid,
                                  const DensityVector& f0, double t, int N,
                                  int n_quad = 64) {
  if (f0.grid != grid)
    throw std::invalid_argument("dyson_phillips: f0 lives on a different grid");
  if (N < 0) throw std::invalid_argument("dyson_phillips: N must be >= 0");
  if (!(t >= 0.0)) throw std::invalid_argument("dyson_phillips: t must be >= 0");
  if (n_quad < 2 || n_quad % 2 != 0)
    throw std::invalid_argument("dyson_phillips: n_quad must be even and >= 2");
  if (model.phase_space.bounded() && grid.x_max() != model.phase_space.upper())
    throw std::invalid_argument("dyson_phillips: grid must span the bounded phase space");

  const double lam = model.lambda;
  DysonResult out(grid);
  out.terms.assign(static_cast<std::size_t>(N) + 1, detail::zero_like(grid));
  out.term_mass.assign(static_cast<std::size_t>(N) + 1, 0.0);

  if (t == 0.0) {
    out.terms[0] = f0;
    out.term_mass[0] = f0.mass();
    out.partial = f0;
    out.tail_bound = 0.0;
    return out;
  }

  const int m = n_quad;
  const double h = t / m;
  const detail::TransportTable table(model.flow, grid, h, m);
  const FPMatrix fp(model.boost, grid);

  std::vector<std::vector<double>> weights(m + 1);
  for (int j = 0; j <= m; ++j) weights[j] = detail::prefix_weights(j, h);

  // cur[k] holds S_n(k h) f0 for the current level n
  std::vector<DensityVector> cur(m + 1, f0), next(m + 1, detail::zero_like(grid));
  for (int k = 0; k <= m; ++k) table.apply(k, f0, cur[k]);

  double weight = std::exp(-lam * t); // e^{-lambda t} lambda^n
  DensityVector partial = detail::zero_like(grid);
  DensityVector scratch = detail::zero_like(grid);

  for (int n = 0;; ++n) {
    out.terms[n] = detail::zero_like(grid);
    detail::axpy(weight, cur[m], out.terms[n]);
    out.term_mass[n] = out.terms[n].mass();
    detail::axpy(1.0, out.terms[n], partial);
    if (n == N) break;

    std::vector<DensityVector> kicked;
    kicked.reserve(m + 1);
    for (int k = 0; k <= m; ++k) kicked.push_back(fp.apply_density(cur[k]));
    for (int j = 0; j <= m; ++j) {
      next[j] = detail::zero_like(grid);
      const auto& w = weights[j];
      for (int k = 0; k <= j; ++k) {
        if (w[k] == 0.0) continue;
        table.apply(j - k, kicked[k], scratch);
        detail::axpy(w[k], scratch, next[j]);
      }
    }
    cur.swap(next);
    weight *= lam;
  }

  out.partial = std::move(partial);

  double pmf = std::exp(-lam * t), retained = pmf;
  for (int n = 1; n <= N; ++n) {
    pmf *= lam * t / n;
    retained += pmf;
  }
  out.tail_bound = std::max(0.0, 1.0 - retained);
  return out;
}

} // namespace titerlab

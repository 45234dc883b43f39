#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <titerlab/ensemble.hpp>
#include <titerlab/evolve.hpp>
#include <titerlab/generator.hpp>
#include <titerlab/lyapunov.hpp>
#include <titerlab/util.hpp>

namespace titerlab {

// Classification of the long-run behaviour.  The semigroup obeys a strict
// alternative: either every initial density is attracted to one invariant
// density, or mass eventually leaves every compact set.  The analytic
// criterion compares the decay rate against lambda times the log of the
// boost multiplier; drift checks and an evolution-based mass audit supply
// independent evidence, and a definitive verdict requires agreement.

enum class Stability { Stable, Sweeping, Boundary, Unknown };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "Stable";
    case Stability::Sweeping: return "Sweeping";
    case Stability::Boundary: return "Boundary";
    case Stability::Unknown: return "Unknown";
  }
  return "?";
}

struct Evidence {
  std::string source;
  std::string detail;
};

struct Verdict {
  Stability stability = Stability::Unknown;
  // exponent of the attached power test function, when one certifies
  double gamma_witness = std::numeric_limits<double>::quiet_NaN();
  // gamma a + lambda b^{-gamma} - lambda at the witness; negative certifies sweeping
  double c_gamma = std::numeric_limits<double>::quiet_NaN();
  // -gamma a + lambda (b^gamma - 1) at the witness; negative certifies stability
  double drift_coefficient = std::numeric_limits<double>::quiet_NaN();
  std::vector<Evidence> evidence;
};

// gamma a + lambda b^{-gamma} - lambda: the decay-rate bound for the
// negative moment E xi_t^{-gamma} under the comparisons g >= -a x and
// Q >= b x.  Negative values force the moment down, i.e. mass out.
inline double sweeping_rate(double a, double b, double lambda, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("sweeping_rate: gamma must be positive");
  if (!(a > 0.0) || !(b >= 1.0) || !(lambda > 0.0))
    throw std::invalid_argument("sweeping_rate: need a > 0, b >= 1, lambda > 0");
  return gamma * a + lambda * std::pow(b, -gamma) - lambda;
}

namespace detail {

template <class F>
double golden_min(F&& f, double lo, double hi, double tol = 1e-8) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a); fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

} // namespace detail

inline Verdict classify_power_law(double a, double b, double lambda, double tol = 1e-3) {
  if (!(a > 0.0)) throw std::invalid_argument("classify_power_law: a must be positive");
  if (!(b >= 1.0))
    throw std::invalid_argument(
        "classify_power_law: b must be >= 1 (no multiplicative comparison below that)");
  if (!(lambda > 0.0)) throw std::invalid_argument("classify_power_law: lambda must be positive");
  if (!(tol >= 0.0)) throw std::invalid_argument("classify_power_law: tol must be >= 0");

  const double threshold = lambda * std::log(b);
  Verdict v;
  v.evidence.push_back({"power-law comparison",
                        "a = " + detail::num(a) + " vs lambda*ln(b) = " + detail::num(threshold)});
  if (a > threshold + tol) {
    v.stability = Stability::Stable;
    v.gamma_witness = detail::golden_min(
        [&](double g) { return -a * g + lambda * (std::pow(b, g) - 1.0); }, 1e-8, 5.0);
    v.drift_coefficient = -a * v.gamma_witness + lambda * (std::pow(b, v.gamma_witness) - 1.0);
    v.c_gamma = sweeping_rate(a, b, lambda, v.gamma_witness);
    v.evidence.push_back({"drift witness",
                          "V(x) = x^" + detail::num(v.gamma_witness) + " has tail coefficient " +
                              detail::num(v.drift_coefficient)});
  } else if (a < threshold - tol) {
    v.stability = Stability::Sweeping;
    v.gamma_witness = detail::golden_min(
        [&](double g) { return sweeping_rate(a, b, lambda, g); }, 1e-8, 5.0);
    v.c_gamma = sweeping_rate(a, b, lambda, v.gamma_witness);
    v.drift_coefficient = -a * v.gamma_witness + lambda * (std::pow(b, v.gamma_witness) - 1.0);
    v.evidence.push_back({"sweeping witness",
                          "gamma = " + detail::num(v.gamma_witness) + " gives c_gamma = " +
                              detail::num(v.c_gamma)});
  } else {
    v.stability = Stability::Boundary;
    v.evidence.push_back({"boundary", "|a - lambda*ln(b)| <= " + detail::num(tol) +
                                          "; the criterion does not decide the equality case"});
  }
  return v;
}

// Eventual bounds on -g(x)/x and Q(x)/x over the top decade of the probed
// range.  These feed the power-law comparison when the model is not given
// in closed power-law form.
struct TailFit {
  double a_low = 0.0, a_high = 0.0; // range of -g(x)/x
  double b_low = 0.0, b_high = 0.0; // range of Q(x)/x
  double probe_lo = 0.0, probe_hi = 0.0;
  bool available = false;
};

inline TailFit fit_tail_bounds(const ModelSpec& model, double x_big = 1e4, int n = 200) {
  if (model.phase_space.bounded())
    throw std::invalid_argument("fit_tail_bounds: tail bounds need the half line");
  if (!(x_big > 0.0) || n < 2) throw std::invalid_argument("fit_tail_bounds: bad probe range");
  TailFit fit;
  fit.probe_lo = x_big / 10.0;
  fit.probe_hi = x_big;
  fit.a_low = fit.b_low = std::numeric_limits<double>::infinity();
  fit.a_high = fit.b_high = -fit.a_low;
  bool ok = true;
  for (double x : detail::logspace(fit.probe_lo, fit.probe_hi, n)) {
    const double ga = -model.flow.g(x) / x;
    const double qb = model.boost.apply(x) / x;
    if (!std::isfinite(ga) || !std::isfinite(qb) || ga <= 0.0 || qb <= 0.0) {
      ok = false;
      break;
    }
    fit.a_low = std::min(fit.a_low, ga);
    fit.a_high = std::max(fit.a_high, ga);
    fit.b_low = std::min(fit.b_low, qb);
    fit.b_high = std::max(fit.b_high, qb);
  }
  fit.available = ok;
  return fit;
}

enum class TightnessVerdict { Tight, Escaping, Inconclusive };

inline const char* to_string(TightnessVerdict v) {
  switch (v) {
    case TightnessVerdict::Tight: return "Tight";
    case TightnessVerdict::Escaping: return "Escaping";
    case TightnessVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct TightnessReport {
  TightnessVerdict verdict = TightnessVerdict::Inconclusive;
  double kappa = 0.5;
  std::vector<double> compacta;          // right endpoints of [0, F_k]
  std::vector<double> checkpoints;
  std::vector<std::vector<double>> mass; // mass[k][i]: on [0, F_k] at checkpoint i
  std::string detail;
};

// Evolves f0 and audits how much mass stays on nested compacta.  Tight
// means some fixed compact keeps at least kappa at every late checkpoint;
// Escaping means every compact drains monotonically and the full grid has
// genuinely lost mass.  Conflicting or weak signals stay Inconclusive.
inline TightnessReport empirical_tightness(const ModelSpec& model, const Grid& grid,
                                           const DensityVector& f0, double horizon,
                                           std::vector<double> checkpoints = {},
                                           double kappa = 0.5) {
  if (!(horizon > 0.0)) throw std::invalid_argument("empirical_tightness: horizon must be positive");
  if (!(kappa > 0.0) || !(kappa < 1.0))
    throw std::invalid_argument("empirical_tightness: kappa must lie in (0, 1)");
  if (checkpoints.empty())
    checkpoints = {horizon / 4.0, horizon / 2.0, 3.0 * horizon / 4.0, horizon};
  std::sort(checkpoints.begin(), checkpoints.end());
  TightnessReport rep;
  rep.kappa = kappa;
  rep.checkpoints = checkpoints;
  rep.compacta = {0.25 * grid.x_max(), 0.5 * grid.x_max(), 0.75 * grid.x_max(), grid.x_max()};
  if (checkpoints.size() < 2 || !(checkpoints.front() > 0.0)) {
    rep.detail = "horizon too short for a trend";
    return rep;
  }

  GeneratorMatrix A(model, grid);
  DensityVector f = f0;
  rep.mass.assign(rep.compacta.size(), {});
  double t_prev = 0.0;
  for (double t : checkpoints) {
    f = evolve(A, f, t - t_prev);
    t_prev = t;
    for (std::size_t k = 0; k < rep.compacta.size(); ++k) {
      double m = 0.0;
      for (int i = 0; i < grid.n_cells(); ++i) {
        const double over =
            std::max(0.0, std::min(grid.right(i), rep.compacta[k]) - grid.left(i));
        m += f.values[i] * over;
      }
      rep.mass[k].push_back(m);
    }
  }

  const std::size_t nk = rep.compacta.size(), nt = checkpoints.size();
  bool tight_flag = false;
  for (std::size_t k = 0; k < nk; ++k) {
    double late_min = 1.0;
    for (std::size_t i = 0; i < nt; ++i)
      if (checkpoints[i] >= horizon / 2.0) late_min = std::min(late_min, rep.mass[k][i]);
    if (late_min >= kappa) tight_flag = true;
  }
  bool monotone = true;
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t i = 1; i < nt; ++i)
      if (rep.mass[k][i] > rep.mass[k][i - 1] + 1e-9) monotone = false;
  const bool drained = rep.mass[nk - 1].back() <= rep.mass[nk - 1].front() - 0.1;
  const bool escape_flag = monotone && drained;

  if (tight_flag && !escape_flag) {
    rep.verdict = TightnessVerdict::Tight;
    rep.detail = "a fixed compact keeps mass >= " + detail::num(kappa) + " at late checkpoints";
  } else if (escape_flag && !tight_flag) {
    rep.verdict = TightnessVerdict::Escaping;
    rep.detail = "every compact drains monotonically; full-grid mass fell from " +
                 detail::num(rep.mass[nk - 1].front()) + " to " +
                 detail::num(rep.mass[nk - 1].back());
  } else {
    rep.detail = tight_flag ? "mixed signals: retention and drainage both present"
                            : "no compact retains mass, but drainage is not established";
  }
  return rep;
}

struct FoguelOptions {
  double tail_probe = 1e4;   // right end of the tail-fit window
  double horizon = 40.0;     // mass-audit run length
  double x_max_cap = 200.0;  // ceiling for the auto-sized audit grid
  int grid_cells = 600;
  double kappa = 0.5;
  std::uint64_t seed = 7;
  double classify_tol = 1e-3;
};

// Combined verdict.  Bounded models are stable outright; on the half line
// the analytic comparison, the drift check, and the mass audit must agree,
// otherwise the verdict stays Unknown with the evidence attached.
inline Verdict foguel_verdict(const ModelSpec& model, const FoguelOptions& opts = {}) {
  Verdict v;
  if (model.phase_space.bounded()) {
    v.stability = Stability::Stable;
    v.evidence.push_back({"bounded domain",
                          "decay with a ceiling-fixing boost on [0, " +
                              detail::num(model.phase_space.upper()) +
                              "]: asymptotically stable unconditionally"});
    return v;
  }

  // analytic strand: eventual power-law bounds
  const TailFit fit = fit_tail_bounds(model, opts.tail_probe);
  Stability analytic = Stability::Unknown;
  if (fit.available) {
    v.evidence.push_back({"tail fit",
                          "-g/x in [" + detail::num(fit.a_low) + ", " + detail::num(fit.a_high) +
                              "], Q/x in [" + detail::num(fit.b_low) + ", " +
                              detail::num(fit.b_high) + "] over [" + detail::num(fit.probe_lo) +
                              ", " + detail::num(fit.probe_hi) + "]"});
    const Verdict stable_side =
        classify_power_law(fit.a_low, std::max(fit.b_high, 1.0), model.lambda, opts.classify_tol);
    const Verdict sweep_side =
        classify_power_law(fit.a_high, std::max(fit.b_low, 1.0), model.lambda, opts.classify_tol);
    if (stable_side.stability == Stability::Stable) {
      analytic = Stability::Stable;
      v.gamma_witness = stable_side.gamma_witness;
      v.drift_coefficient = stable_side.drift_coefficient;
      v.c_gamma = stable_side.c_gamma;
      v.evidence.insert(v.evidence.end(), stable_side.evidence.begin(), stable_side.evidence.end());
    } else if (sweep_side.stability == Stability::Sweeping) {
      analytic = Stability::Sweeping;
      v.gamma_witness = sweep_side.gamma_witness;
      v.c_gamma = sweep_side.c_gamma;
      v.drift_coefficient = sweep_side.drift_coefficient;
      v.evidence.insert(v.evidence.end(), sweep_side.evidence.begin(), sweep_side.evidence.end());
    } else if (stable_side.stability == Stability::Boundary ||
               sweep_side.stability == Stability::Boundary) {
      analytic = Stability::Boundary;
      v.evidence.push_back({"power-law comparison", "within tolerance of the equality case"});
    } else {
      v.evidence.push_back({"power-law comparison",
                            "tail bounds straddle the threshold; no analytic certificate"});
    }
  } else {
    v.evidence.push_back({"tail fit", "ratios not finite over the probe window"});
  }

  // drift strand: the identity test function plus the analytic witness
  bool drift_ok = false;
  {
    auto xs = detail::logspace(1e-2, opts.tail_probe, 400);
    auto lin = detail::linspace(1e-3, opts.tail_probe / 100.0, 100);
    xs.insert(xs.end(), lin.begin(), lin.end());
    std::vector<LyapunovFunction> cands;
    cands.push_back(LyapunovFunction::identity());
    if (std::isfinite(v.gamma_witness) && v.gamma_witness > 0.0 &&
        analytic == Stability::Stable)
      cands.push_back(LyapunovFunction::power(v.gamma_witness));
    for (const auto& V : cands) {
      const DriftReport rep = check_drift(model, V, opts.tail_probe / 100.0, xs);
      v.evidence.push_back({"drift condition", rep.detail +
                                                   (rep.satisfied ? " (satisfied)" : " (not satisfied)")});
      if (rep.satisfied) {
        drift_ok = true;
        break;
      }
    }
  }

  // empirical strand: evolve and audit retained mass
  TightnessVerdict tightness = TightnessVerdict::Inconclusive;
  {
    auto est = ergodic_average(model, 1.0, opts.horizon / 4.0, opts.horizon,
                               Observable::monomial(1), opts.seed);
    double x_max = 8.0;
    if (std::isfinite(est.value) && est.value > 0.0)
      x_max = std::max(8.0, 10.0 * est.value);
    x_max = std::min(x_max, opts.x_max_cap);
    Grid grid(x_max, opts.grid_cells);
    auto f0 = DensityVector::uniform(grid, 0.0, 1.0);
    const TightnessReport rep =
        empirical_tightness(model, grid, f0, opts.horizon, {}, opts.kappa);
    tightness = rep.verdict;
    v.evidence.push_back({"mass retention",
                          std::string(to_string(rep.verdict)) + " on [0, " + detail::num(x_max) +
                              "]: " + rep.detail});
  }

  if (analytic == Stability::Stable && drift_ok && tightness == TightnessVerdict::Tight)
    v.stability = Stability::Stable;
  else if (analytic == Stability::Sweeping && !drift_ok &&
           tightness == TightnessVerdict::Escaping)
    v.stability = Stability::Sweeping;
  else if (analytic == Stability::Boundary)
    v.stability = Stability::Boundary;
  else
    v.stability = Stability::Unknown;
  return v;
}

} // namespace titerlab

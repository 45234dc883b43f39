#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <titerlab/dyson.hpp>
#include <titerlab/ensemble.hpp>
#include <titerlab/model.hpp>
#include <titerlab/resolvent.hpp>
#include <titerlab/rng.hpp>
#include <titerlab/trajectory.hpp>
#include <titerlab/util.hpp>

namespace titerlab {

// Built-in consistency battery: each check replays one of the identities the
// library leans on (flow Jacobian, single-jump reach derivative, minorization
// certificate, transition lower bound, jump-expansion masses, resolvent
// agreement) against an independent reference and reports the measured error
// next to its tolerance.

struct VerifyCheck {
  std::string name;
  bool passed = false;
  double error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 97;
  long mc_paths = 20000;
  // test hook: offset added to every computed Jacobian so the battery's
  // failure path can be exercised deliberately
  double jacobian_fault = 0.0;
};

namespace verifydetail {

inline double probe_span(const ModelSpec& model) {
  return model.phase_space.bounded() ? 0.9 * model.phase_space.upper() : 8.0;
}

inline VerifyCheck check_jacobian(const ModelSpec& model, const VerifyOptions& opts) {
  VerifyCheck c{"flow-jacobian-identity"};
  c.tolerance = 1e-5;
  const double X = probe_span(model);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double x = X * double(i + 1) / 10.0;
    for (int j = 0; j < 10; ++j) {
      const double t = 0.05 + 2.0 * double(j) / 9.0;
      const double analytic = model.flow.jacobian(x, t) + opts.jacobian_fault;
      const double h = 1e-5 * x;
      const double fd =
          (model.flow.advance(x + h, t) - model.flow.advance(x - h, t)) / (2.0 * h);
      worst = std::max(worst, std::fabs(analytic - fd) / std::max(1e-12, std::fabs(fd)));
    }
  }
  c.error = worst;
  c.passed = worst <= c.tolerance;
  c.detail = "max relative gap to central differences over a 10x10 (x,t) grid";
  return c;
}

inline VerifyCheck check_reach_derivative(const ModelSpec& model, const VerifyOptions& opts) {
  VerifyCheck c{"reach-derivative-consistency"};
  c.tolerance = 1e-5;
  RngStream rng(opts.seed);
  const double X = probe_span(model);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double x = rng.uniform(0.05 * X, X);
    const double t = rng.uniform(0.2, 3.0);
    const double h = 1e-6 * t;
    const double tau = rng.uniform(h, t - h);
    const double analytic = reach_dtau(model, tau, t, x);
    const double fd =
        (reach(model, tau + h, t, x) - reach(model, tau - h, t, x)) / (2.0 * h);
    worst = std::max(worst, std::fabs(analytic - fd) / std::max(1.0, std::fabs(analytic)));
  }
  c.error = worst;
  c.passed = worst <= c.tolerance;
  c.detail = "single-jump state derivative vs finite differences, 200 random (tau,t,x)";
  return c;
}

inline VerifyCheck check_minorization(const ModelSpec& model) {
  VerifyCheck c{"minorization-certificate"};
  c.tolerance = 1.0;  // required width delta*tau0/3 over the achieved width
  const double X = probe_span(model);
  double worst_ratio = 0.0;
  bool all_ok = true;
  for (double frac : {0.0625, 0.125, 0.625}) {
    const double x0 = frac * X;
    const auto cert = verify_minorization(model, x0, 1.0, 0.25 * x0);
    if (!cert.ok || !(cert.level > 0.0)) {
      all_ok = false;
      c.detail = "no certificate at x0 = " + detail::num(x0) +
                 (cert.reason.empty() ? "" : ": " + cert.reason);
      break;
    }
    worst_ratio = std::max(worst_ratio, (cert.delta * cert.tau0 / 3.0) / cert.width());
  }
  c.error = all_ok ? worst_ratio : std::numeric_limits<double>::infinity();
  c.passed = all_ok && worst_ratio <= c.tolerance;
  if (all_ok)
    c.detail = "required width delta*tau0/3 over the certified width, worst of three starts";
  return c;
}

inline VerifyCheck check_transition_bound(const ModelSpec& model, const VerifyOptions& opts) {
  VerifyCheck c{"transition-lower-bound"};
  c.tolerance = 0.0;  // worst signed violation of (estimate >= bound - 3 se)
  RngStream setup(opts.seed + 1);
  const double X = probe_span(model);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double x = setup.uniform(0.1 * X, 0.8 * X);
    const double t = setup.uniform(0.5, 2.0);
    // an interval the one-jump reach curve genuinely sweeps
    const double r1 = reach(model, 0.2 * t, t, x);
    const double r2 = reach(model, 0.6 * t, t, x);
    const double glo = std::min(r1, r2), ghi = std::max(r1, r2);
    const double bound = transition_lower_bound(model, x, t, glo, ghi);
    long hits = 0;
    for (long p = 0; p < opts.mc_paths; ++p) {
      RngStream rng = RngStream::derive(opts.seed + 2 + 10 * std::uint64_t(k), std::uint64_t(p));
      const double v = detail::state_at(model, x, t, rng);
      if (v >= glo && v <= ghi) ++hits;
    }
    const double est = double(hits) / double(opts.mc_paths);
    const double se = std::sqrt(std::max(est * (1.0 - est), 1e-12) / double(opts.mc_paths));
    worst = std::max(worst, bound - 3.0 * se - est);
  }
  c.error = worst;
  c.passed = worst <= c.tolerance;
  c.detail = "Monte Carlo occupancy vs the one-jump bound, 5 random (x,t,interval)";
  return c;
}

inline VerifyCheck check_expansion_masses(const ModelSpec& model) {
  VerifyCheck c{"jump-expansion-term-masses"};
  c.tolerance = 1e-4;
  const double t = 1.0;
  const double lt = model.lambda * t;
  int N = 0;
  double pmf = std::exp(-lt), cum = pmf;
  while (1.0 - cum > 1e-3 && N < 12) {
    ++N;
    pmf *= lt / N;
    cum += pmf;
  }
  const double x_max = model.phase_space.bounded() ? model.phase_space.upper() : 8.0;
  Grid grid(x_max, 200);
  auto f0 = DensityVector::uniform(grid, 0.0, 0.25 * x_max);
  const auto res = dyson_phillips(model, grid, f0, t, N);
  double worst = 0.0;
  double term = std::exp(-lt);
  for (int n = 0; n <= N; ++n) {
    worst = std::max(worst, std::fabs(res.term_mass[n] - term));
    term *= lt / double(n + 1);
  }
  c.error = worst;
  c.passed = worst <= c.tolerance;
  c.detail = "expansion term masses vs the jump-count distribution, n <= " + std::to_string(N);
  return c;
}

inline VerifyCheck check_resolvent(const ModelSpec& model) {
  VerifyCheck c{"resolvent-identity"};
  const int n = 250;
  c.tolerance = 5.0 / n;
  const bool usable = model.phase_space.bounded() && model.boost.has_plateau();
  const ModelSpec target =
      usable ? model
             : ModelSpec(FlowModel::linear_decay(1.0, PhaseSpace::interval(10.0)),
                         BoostMap::plateau(6.0, 10.0, Expr::parse("x + 4")), 1.0);
  const double M = target.phase_space.upper();
  Grid grid(M, n);
  const double ctr = 0.65 * M, s = 0.08 * M;
  auto f = DensityVector::from_function(
      grid, [&](double x) { return std::exp(-0.5 * (x - ctr) * (x - ctr) / (s * s)); });
  f.normalize();
  const double mu = 1.0;
  const auto direct = resolvent_a0(target, grid, mu, f);

  Eigen::SparseMatrix<double> A = a0_matrix(target, grid);
  Eigen::SparseMatrix<double> lhs(n, n);
  lhs.setIdentity();
  lhs = mu * lhs - A;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(lhs);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = f.values[i];
  Eigen::VectorXd u = lu.solve(rhs);
  double err = 0.0;
  for (int i = 0; i < n; ++i) err += std::fabs(direct.values.values[i] - u[i]);
  err *= grid.dx();
  c.error = err;
  c.passed = err <= c.tolerance;
  c.detail = usable ? "integral formula vs the sparse solve on the given model"
                    : "integral formula vs the sparse solve on the reference ceiling model";
  return c;
}

}  // namespace verifydetail

inline std::vector<VerifyCheck> run_verification(const ModelSpec& model,
                                                 const VerifyOptions& opts = {}) {
  std::vector<VerifyCheck> out;
  out.push_back(verifydetail::check_jacobian(model, opts));
  out.push_back(verifydetail::check_reach_derivative(model, opts));
  out.push_back(verifydetail::check_minorization(model));
  out.push_back(verifydetail::check_transition_bound(model, opts));
  out.push_back(verifydetail::check_expansion_masses(model));
  out.push_back(verifydetail::check_resolvent(model));
  return out;
}

}  // namespace titerlab

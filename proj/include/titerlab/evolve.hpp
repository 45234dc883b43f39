#pragma once

#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "titerlab/generator.hpp"
#include "titerlab/grid.hpp"

namespace titerlab {

struct EvolveOptions {
  double mass_tol = 1e-8;           // allowed total-mass drift over the run
  double negativity_floor = -1e-12; // undershoot below this is a hard error
};

// Method-of-lines RK4 under the generator's CFL step. The escaped-mass
// coordinate is integrated inside the same stages, so the linear invariant
// (grid mass + escaped mass) is preserved to roundoff. Undershoots within the
// floor are clipped and the clip compensated by scaling, keeping the result a
// density.
inline DensityVector evolve(const GeneratorMatrix& A, const DensityVector& f0, double t,
                            const EvolveOptions& opts = {}) {
  if (f0.grid != A.grid()) throw std::invalid_argument("evolve: grid mismatch");
  if (!(t >= 0)) throw std::invalid_argument("evolve: negative time");
  const double mass0 = f0.mass();
  if (t == 0) return f0;

  const int n = A.grid().n_cells();
  const long steps = std::max(1L, long(std::ceil(t / A.cfl_dt())));
  const double dt = t / double(steps);

  std::vector<double> f = f0.values, k1(n), k2(n), k3(n), k4(n), tmp(n);
  double escaped = f0.escaped;
  double e1, e2, e3, e4;

  for (long s = 0; s < steps; ++s) {
    A.apply(f, k1, e1);
    for (int i = 0; i < n; ++i) tmp[i] = f[i] + 0.5 * dt * k1[i];
    A.apply(tmp, k2, e2);
    for (int i = 0; i < n; ++i) tmp[i] = f[i] + 0.5 * dt * k2[i];
    A.apply(tmp, k3, e3);
    for (int i = 0; i < n; ++i) tmp[i] = f[i] + dt * k3[i];
    A.apply(tmp, k4, e4);
    for (int i = 0; i < n; ++i)
      f[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    escaped += dt / 6.0 * (e1 + 2 * e2 + 2 * e3 + e4);

    // Positivity bookkeeping: hard error on a real undershoot, clip-and-scale
    // for roundoff-level ones.
    double clipped = 0.0, positive = 0.0;
    for (int i = 0; i < n; ++i) {
      if (f[i] < 0) {
        if (f[i] < opts.negativity_floor)
          throw std::runtime_error("evolve: negative density " +
                                   std::to_string(f[i]) + " in cell " +
                                   std::to_string(i));
        clipped -= f[i];
        f[i] = 0.0;
      } else {
        positive += f[i];
      }
    }
    if (clipped > 0 && positive > 0) {
      const double scale = (positive - clipped) / positive;
      for (int i = 0; i < n; ++i) f[i] *= scale;
    }
  }

  DensityVector out(A.grid());
  out.values = std::move(f);
  out.escaped = escaped;
  if (std::abs(out.mass() - mass0) > opts.mass_tol)
    throw std::runtime_error("evolve: mass drift " +
                             std::to_string(out.mass() - mass0) +
                             " exceeds tolerance");
  return out;
}

struct StationaryResult {
  DensityVector density;
  double residual = 0;      // L1 norm of A f, with f normalized to unit mass
  int iterations = 0;
  bool converged = false;
  bool unique_ok = true;    // false when a second start finds a different vector
  std::string message;
};

namespace detail {

inline Eigen::VectorXd stationary_iterate(
    const Eigen::SparseMatrix<double>& A,
    Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu, Eigen::VectorXd v,
    double dx, double tol, int max_iter, double& residual, int& iters) {
  const auto resid = [&](const Eigen::VectorXd& u) {
    return (A * u).cwiseAbs().sum() * dx;
  };
  v /= v.sum() * dx;
  residual = resid(v);
  iters = 0;
  double best = residual;
  Eigen::VectorXd best_v = v;
  while (residual > tol && iters < max_iter) {
    Eigen::VectorXd w = lu.solve(v);
    if (w.sum() < 0) w = -w;
    v = w / (w.sum() * dx);
    residual = resid(v);
    ++iters;
    if (residual < best) {
      best = residual;
      best_v = v;
    } else if (residual > 10 * best) {
      break;  // diverging away from the best iterate; keep it
    }
  }
  residual = best;
  return best_v;
}

}  // namespace detail

// Inverse power iteration on (A - sigma I) with a small negative shift. In
// bounded modes the discrete generator has an exact null vector and the
// residual reaches the requested tolerance; in half-line mode the overflow
// leak caps how small the residual can get, which the caller sees reported.
inline StationaryResult stationary_density(const GeneratorMatrix& G,
                                           double residual_tol = 1e-10,
                                           int max_iter = 200,
                                           bool check_uniqueness = true) {
  const int n = G.grid().n_cells();
  const double dx = G.grid().dx();
  const double sigma = -1e-8;
  Eigen::SparseMatrix<double> A = G.assemble();
  Eigen::SparseMatrix<double> shifted = A;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(shifted);
  StationaryResult out{DensityVector(G.grid())};
  if (lu.info() != Eigen::Success) {
    out.message = "sparse factorization failed";
    return out;
  }

  double residual = 0;
  int iters = 0;
  Eigen::VectorXd v = detail::stationary_iterate(
      A, lu, Eigen::VectorXd::Ones(n), dx, residual_tol, max_iter, residual, iters);

  out.iterations = iters;
  out.residual = residual;
  out.converged = residual <= residual_tol;
  if (!out.converged)
    out.message = "residual " + std::to_string(residual) +
                  " above tolerance (expected under sweeping or overflow leak)";

  for (int i = 0; i < n; ++i) {
    if (v[i] < -1e-10) {
      out.unique_ok = false;
      out.message = "stationary vector has a significant negative component";
    }
    out.density.values[i] = std::max(v[i], 0.0);
  }
  out.density.normalize();

  if (check_uniqueness && out.converged) {
    Eigen::VectorXd ramp(n);
    for (int i = 0; i < n; ++i) ramp[i] = 1.0 + double(i % 7);
    double res2 = 0;
    int it2 = 0;
    Eigen::VectorXd v2 = detail::stationary_iterate(A, lu, ramp, dx, residual_tol,
                                                    max_iter, res2, it2);
    DensityVector d2(G.grid());
    for (int i = 0; i < n; ++i) d2.values[i] = std::max(v2[i], 0.0);
    d2.normalize();
    if (total_variation(out.density, d2) > 1e-6) {
      out.unique_ok = false;
      out.message = "two starting vectors converged to different null vectors";
    }
  }
  return out;
}

}  // namespace titerlab

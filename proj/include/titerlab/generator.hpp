#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "titerlab/fp_matrix.hpp"
#include "titerlab/grid.hpp"
#include "titerlab/model.hpp"

namespace titerlab {

enum class GeneratorMode { HalfLine, BoundedB, BoundedBPrime };

// Discrete generator A = transport + rate * (jump - identity) acting on
// per-cell density averages. Transport is the conservative first-order upwind
// discretization of -(g f)': since g < 0 the upwind cell at every interface is
// the right one, the left-boundary flux is structurally zero (g(0) = 0), and
// nothing enters at the right edge. Mass balance is exact by construction:
// every column's outflow reappears in another cell or in the escape rate.
class GeneratorMatrix {
public:
  GeneratorMatrix(const ModelSpec& model, const Grid& grid, double cfl_safety = 0.5)
      : grid_(grid), lambda_(model.lambda), fp_(model.boost, grid) {
    if (!(cfl_safety > 0) || cfl_safety > 1)
      throw std::invalid_argument("generator: cfl_safety must lie in (0,1]");
    if (model.phase_space.bounded() && grid.x_max() != model.phase_space.upper())
      throw std::invalid_argument("generator: grid does not span the phase space");
    mode_ = !model.phase_space.bounded()
                ? GeneratorMode::HalfLine
                : (model.boost.has_plateau() ? GeneratorMode::BoundedBPrime
                                             : GeneratorMode::BoundedB);
    const int n = grid.n_cells();
    b_.resize(n + 1);
    double b_max = 0;
    for (int k = 0; k <= n; ++k) {
      const double xk = grid.x_max() * double(k) / n;
      b_[k] = std::max(0.0, -model.flow.g(xk));
      b_max = std::max(b_max, b_[k]);
    }
    b_[0] = 0.0;  // structural zero flux at the origin
    if (!(b_max > 0)) throw std::invalid_argument("generator: flow field is static");
    cfl_dt_ = std::min(cfl_safety * grid.dx() / b_max, cfl_safety / lambda_);
  }

  const Grid& grid() const { return grid_; }
  GeneratorMode mode() const { return mode_; }
  double lambda() const { return lambda_; }
  const FPMatrix& fp() const { return fp_; }
  double cfl_dt() const { return cfl_dt_; }
  double interface_speed(int k) const { return b_[k]; }

  // out = A f; escape_rate receives d(escaped)/dt (zero in bounded modes).
  void apply(const std::vector<double>& f, std::vector<double>& out,
             double& escape_rate) const {
    const int n = grid_.n_cells();
    out.assign(n, 0.0);
    const double inv_dx = 1.0 / grid_.dx();
    // (F_i - F_{i+1})/dx with F_k = -b_k f_k, F_0 = F_n = 0.
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      if (i > 0) acc -= b_[i] * f[i];
      if (i + 1 < n) acc += b_[i + 1] * f[i + 1];
      out[i] = acc * inv_dx - lambda_ * f[i];
    }
    escape_rate = 0.0;
    for (int i = 0; i < n; ++i) {
      const double fi = f[i];
      if (fi == 0.0) continue;
      for (auto [j, w] : fp_.row(i)) out[j] += lambda_ * w * fi;
      escape_rate += fp_.overflow(i) * fi;
    }
    escape_rate *= lambda_ * grid_.dx();
  }

  Eigen::SparseMatrix<double> assemble() const {
    const int n = grid_.n_cells();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(n) * 5);
    const double inv_dx = 1.0 / grid_.dx();
    for (int i = 0; i < n; ++i) {
      double diag = -lambda_;
      if (i > 0) diag -= b_[i] * inv_dx;
      trip.emplace_back(i, i, diag);
      if (i + 1 < n) trip.emplace_back(i, i + 1, b_[i + 1] * inv_dx);
      for (auto [j, w] : fp_.row(i)) trip.emplace_back(j, i, lambda_ * w);
    }
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

private:
  Grid grid_;
  double lambda_;
  FPMatrix fp_;
  GeneratorMode mode_ = GeneratorMode::HalfLine;
  std::vector<double> b_;  // leftward interface speeds -g(edge_k), b[0] = 0
  double cfl_dt_ = 0;
};

}  // namespace titerlab

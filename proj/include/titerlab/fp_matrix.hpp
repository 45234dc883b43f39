#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "titerlab/boost_map.hpp"
#include "titerlab/grid.hpp"

namespace titerlab {

// Ulam discretization of the jump transfer operator. Row i lists the fraction
// of cell i's mass sent into each destination cell; the overflow entry is the
// fraction mapped beyond the grid's right edge (half-line truncation). Rows sum
// to 1 by construction: destination boundaries are pulled back once per branch
// and shared between adjacent cells, so the per-row intervals telescope.
class FPMatrix {
public:
  FPMatrix(const BoostMap& q, const Grid& grid) : grid_(grid) {
    if (q.domain().bounded() && q.domain().upper() != grid.x_max())
      throw std::invalid_argument("fp matrix: grid does not match the map's phase space");
    const int n = grid.n_cells();
    rows_.assign(n, {});
    overflow_.assign(n, 0.0);

    for (const auto& br : q.branches()) add_branch(br);

    if (q.has_plateau()) {
      plateau_column_ = grid.cell_of(q.plateau_value());
      const double plo = q.plateau_lo(), phi = q.plateau_hi();
      for (int i = 0; i < n; ++i) {
        const double w =
            std::min(grid.right(i), phi) - std::max(grid.left(i), plo);
        if (w > 0) accumulate(i, plateau_column_, w / grid.dx());
      }
    }
    for (auto& row : rows_) {
      std::sort(row.begin(), row.end());
    }
  }

  const Grid& grid() const { return grid_; }
  int plateau_column() const { return plateau_column_; }
  const std::vector<std::pair<int, double>>& row(int i) const { return rows_[i]; }
  double overflow(int i) const { return overflow_[i]; }

  double row_sum(int i) const {
    double s = overflow_[i];
    for (auto [j, w] : rows_[i]) s += w;
    return s;
  }

  // Image measure of a piecewise-constant density; overflow feeds escaped.
  DensityVector apply_density(const DensityVector& f) const {
    if (f.grid != grid_) throw std::invalid_argument("fp matrix: grid mismatch");
    DensityVector out(grid_);
    out.escaped = f.escaped;  // mass beyond the grid only moves further right
    for (int i = 0; i < grid_.n_cells(); ++i) {
      const double fi = f.values[i];
      if (fi == 0.0) continue;
      for (auto [j, w] : rows_[i]) out.values[j] += fi * w;
      out.escaped += fi * grid_.dx() * overflow_[i];
    }
    return out;
  }

  std::vector<std::tuple<int, int, double>> triplets() const {
    std::vector<std::tuple<int, int, double>> t;
    for (int i = 0; i < grid_.n_cells(); ++i)
      for (auto [j, w] : rows_[i]) t.emplace_back(i, j, w);
    return t;
  }

private:
  void accumulate(int i, int j, double w) {
    for (auto& [col, val] : rows_[i]) {
      if (col == j) {
        val += w;
        return;
      }
    }
    rows_[i].emplace_back(j, w);
  }

  // Pull destination cell edges back through one monotone branch, then hand
  // each source cell the overlap lengths. b[k] is the source point mapping to
  // destination edge k (clamped to the branch); b is monotone in k.
  void add_branch(const BoostBranch& br) {
    const int n = grid_.n_cells();
    const double dx = grid_.dx();
    std::vector<double> b(n + 1);
    for (int k = 0; k <= n; ++k) {
      const double y = std::clamp(grid_.x_max() * double(k) / n, br.img_lo, br.img_hi);
      double x;
      if (y <= br.img_lo)
        x = br.increasing ? br.lo : br.hi;
      else if (y >= br.img_hi)
        x = br.increasing ? br.hi : br.lo;
      else
        x = br.inverse(y);
      b[k] = std::clamp(x, br.lo, std::min(br.hi, 1e300));
    }
    // Source interval feeding destination cell j, plus the overflow interval
    // (image beyond x_max). For decreasing branches the roles flip.
    const double far = std::min(br.hi, 1e300);
    for (int i = 0; i < n; ++i) {
      const double u = std::max(grid_.left(i), br.lo);
      const double v = std::min(grid_.right(i), far);
      if (!(v > u)) continue;
      for (int j = 0; j < n; ++j) {
        const double lo = std::min(b[j], b[j + 1]);
        const double hi = std::max(b[j], b[j + 1]);
        const double w = std::min(v, hi) - std::max(u, lo);
        if (w > 0) accumulate(i, j, w / dx);
      }
      double olo, ohi;
      if (br.increasing) {
        olo = b[n];
        ohi = far;
      } else {
        olo = br.lo;
        ohi = b[n];
      }
      const double w = std::min(v, ohi) - std::max(u, olo);
      if (w > 0) overflow_[i] += w / dx;
    }
  }

  Grid grid_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
  std::vector<double> overflow_;
  int plateau_column_ = -1;
};

}  // namespace titerlab

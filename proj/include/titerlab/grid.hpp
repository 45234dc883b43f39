#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "titerlab/util.hpp"

namespace titerlab {

// Uniform partition of [0, x_max] into n_cells cells.
class Grid {
public:
  Grid(double x_max, int n_cells) : x_max_(x_max), n_(n_cells) {
    if (!(x_max > 0) || n_cells < 2)
      throw std::invalid_argument("grid: need x_max > 0 and at least 2 cells");
    dx_ = x_max / n_cells;
  }

  double x_max() const { return x_max_; }
  int n_cells() const { return n_; }
  double dx() const { return dx_; }

  double left(int i) const { return x_max_ * double(i) / n_; }
  double right(int i) const { return x_max_ * double(i + 1) / n_; }
  double center(int i) const { return x_max_ * (i + 0.5) / n_; }

  // Cell index of x; n_cells() is the out-of-grid sentinel for x > x_max.
  int cell_of(double x) const {
    if (!(x >= 0)) throw std::invalid_argument("grid: negative position");
    if (x > x_max_) return n_;
    return std::min(int(x / dx_), n_ - 1);
  }

  bool operator==(const Grid& o) const { return x_max_ == o.x_max_ && n_ == o.n_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

private:
  double x_max_;
  int n_;
  double dx_;
};

// Piecewise-constant density: per-cell averages plus the mass that has left
// the grid to the right (meaningful in half-line mode only).
struct DensityVector {
  Grid grid;
  std::vector<double> values;
  double escaped = 0.0;

  explicit DensityVector(const Grid& g) : grid(g), values(g.n_cells(), 0.0) {}

  static DensityVector uniform(const Grid& g, double a, double b) {
    if (!(b > a) || a < 0) throw std::invalid_argument("uniform density: need 0 <= a < b");
    DensityVector f(g);
    const double w = b - a;
    for (int i = 0; i < g.n_cells(); ++i) {
      const double lo = std::max(g.left(i), a);
      const double hi = std::min(g.right(i), b);
      if (hi > lo) f.values[i] = (hi - lo) / (w * g.dx());
    }
    if (b > g.x_max()) f.escaped = (b - std::max(a, g.x_max())) / w;
    return f;
  }

  // Cell averages of a function, 4-point Gauss-Legendre per cell.
  static DensityVector from_function(const Grid& g, const std::function<double(double)>& fn) {
    static constexpr double xi[4] = {-0.8611363115940526, -0.3399810435848563,
                                     0.3399810435848563, 0.8611363115940526};
    static constexpr double wt[4] = {0.3478548451374538, 0.6521451548625461,
                                     0.6521451548625461, 0.3478548451374538};
    DensityVector f(g);
    for (int i = 0; i < g.n_cells(); ++i) {
      const double mid = g.center(i);
      const double h = 0.5 * g.dx();
      double acc = 0;
      for (int k = 0; k < 4; ++k) acc += wt[k] * fn(mid + h * xi[k]);
      f.values[i] = 0.5 * acc;
    }
    return f;
  }

  static DensityVector delta(const Grid& g, double x0) {
    DensityVector f(g);
    const int i = g.cell_of(x0);
    if (i >= g.n_cells()) {
      f.escaped = 1.0;
    } else {
      f.values[i] = 1.0 / g.dx();
    }
    return f;
  }

  double mass() const {
    double m = 0;
    for (double v : values) m += v;
    return m * grid.dx() + escaped;
  }

  void normalize() {
    const double m = mass();
    if (!(m > 0)) throw std::domain_error("normalize: zero mass");
    for (double& v : values) v /= m;
    escaped /= m;
  }

  bool is_density(double tol = 1e-10) const {
    if (escaped < 0) return false;
    for (double v : values)
      if (v < 0) return false;
    return std::abs(mass() - 1.0) <= tol;
  }

  double mean() const {
    double m = 0;
    for (int i = 0; i < grid.n_cells(); ++i) m += grid.center(i) * values[i];
    return m * grid.dx();
  }

  double moment(double order) const {
    double m = 0;
    for (int i = 0; i < grid.n_cells(); ++i)
      m += std::pow(grid.center(i), order) * values[i];
    return m * grid.dx();
  }
};

inline double total_variation(const DensityVector& f, const DensityVector& g) {
  if (f.grid != g.grid) throw std::invalid_argument("total_variation: grid mismatch");
  double s = 0;
  for (int i = 0; i < f.grid.n_cells(); ++i) s += std::abs(f.values[i] - g.values[i]);
  return 0.5 * s * f.grid.dx() + 0.5 * std::abs(f.escaped - g.escaped);
}

inline double l1_distance(const DensityVector& f, const DensityVector& g) {
  return 2.0 * total_variation(f, g);
}

}  // namespace titerlab

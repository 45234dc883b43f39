#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCore>

#include <titerlab/grid.hpp>
#include <titerlab/model.hpp>

namespace titerlab {

// Resolvent of the jump-free part of the bounded plateau model.  The
// operator A0 f = -(g f)' - lambda f with the influx condition
// g(M) f(M) = -lambda int_K^M f has the closed-form resolvent
//
//   R(mu, A0) f(x) = -e^{(mu+lambda) phi(x)} / g(x)
//                    * ( lambda I + int_x^M f(r) e^{-(mu+lambda) phi(r)} dr ),
//
// phi(x) = int_x^M dr / g(r) <= 0, where the constant I = int_K^M R f dx
// is fixed by a scalar linear equation.  All exponentials are evaluated as
// differences phi(x) - phi(r) <= 0 for r >= x, so the evaluation never
// overflows even though e^{-(mu+lambda) phi} blows up toward the origin.

struct ResolventResult {
  explicit ResolventResult(const Grid& g) : values(g) {}

  DensityVector values;         // cell averages of R(mu) f on the grid
  double plateau_integral = 0;  // the constant I = int_K^M R f dx
};

namespace detail {

inline constexpr double kGL4Node[4] = {-0.8611363115940526, -0.3399810435848563,
                                       0.3399810435848563, 0.8611363115940526};
inline constexpr double kGL4Weight[4] = {0.3478548451374538, 0.6521451548625461,
                                         0.6521451548625461, 0.3478548451374538};

// int_a^b dr / g(r) for 0 < a <= b; negative since g < 0.
inline double phi_increment(const FlowModel& flow, double a, double b) {
  if (a == b) return 0.0;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int q = 0; q < 4; ++q) {
    const double r = mid + half * kGL4Node[q];
    const double gr = flow.g(r);
    if (!(gr < 0.0))
      throw std::domain_error("resolvent_a0: g vanishes inside (0, M]");
    s += kGL4Weight[q] / gr;
  }
  return s * half;
}

} // namespace detail

// Discrete counterpart of A0: conservative upwind transport, the -lambda
// removal, and the plateau influx routing every cell's [K, M] overlap into
// the last cell.  Used to probe the resolvent identity.
inline Eigen::SparseMatrix<double> a0_matrix(const ModelSpec& model, const Grid& grid) {
  if (!model.phase_space.bounded() || !model.boost.has_plateau())
    throw std::invalid_argument("a0_matrix: model must be bounded with a plateau boost");
  if (grid.x_max() != model.phase_space.upper())
    throw std::invalid_argument("a0_matrix: grid must span the phase space");
  const int n = grid.n_cells();
  const double dx = grid.dx(), lam = model.lambda;
  const double K = model.boost.plateau_lo(), M = model.boost.plateau_hi();
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i) {
    if (i > 0) {
      const double b = std::max(0.0, -model.flow.g(grid.left(i)));
      trips.emplace_back(i, i, -b / dx);
      trips.emplace_back(i - 1, i, b / dx);
    }
    trips.emplace_back(i, i, -lam);
    const double over = std::max(0.0, std::min(grid.right(i), M) - std::max(grid.left(i), K));
    if (over > 0.0) trips.emplace_back(n - 1, i, lam * over / dx);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

inline ResolventResult resolvent_a0(const ModelSpec& model, const Grid& grid,
                                    double mu, const DensityVector& f) {
  if (!model.phase_space.bounded() || !model.boost.has_plateau())
    throw std::invalid_argument("resolvent_a0: model must be bounded with a plateau boost");
  if (!(mu > 0.0)) throw std::invalid_argument("resolvent_a0: lambda must be positive");
  if (f.grid != grid)
    throw std::invalid_argument("resolvent_a0: f lives on a different grid");
  if (grid.x_max() != model.phase_space.upper())
    throw std::invalid_argument("resolvent_a0: grid must span the phase space");

  const FlowModel& flow = model.flow;
  const int n = grid.n_cells();
  const double M = grid.x_max(), lam = model.lambda, lp = mu + lam;
  const double K = model.boost.plateau_lo();
  const bool linear = flow.family() == FlowFamily::LinearDecay;
  const double neg_inf = -std::numeric_limits<double>::infinity();

  const auto phi_closed = [&](double x) {
    return x <= 0.0 ? neg_inf : std::log(x / M) / flow.rate();
  };

  // phi at every edge and center, accumulated downward from phi(M) = 0
  std::vector<double> phi_e(n + 1), phi_c(n);
  phi_e[n] = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    if (linear) {
      phi_c[i] = phi_closed(grid.center(i));
      phi_e[i] = phi_closed(grid.left(i));
    } else {
      phi_c[i] = phi_e[i + 1] + detail::phi_increment(flow, grid.center(i), grid.right(i));
      phi_e[i] = i > 0 ? phi_c[i] + detail::phi_increment(flow, grid.left(i), grid.center(i))
                       : neg_inf;
    }
  }
  for (int i = 1; i <= n; ++i)
    if (!(flow.g(grid.left(i)) < 0.0))
      throw std::domain_error("resolvent_a0: g vanishes inside (0, M]");

  double phi_K;
  if (linear) {
    phi_K = phi_closed(K);
  } else {
    const int jK = std::min(grid.cell_of(K), n - 1);
    phi_K = phi_e[jK + 1] + detail::phi_increment(flow, K, grid.right(jK));
  }

  // J(x) = int_x^M f(r) e^{lp (phi(x) - phi(r))} dr by one downward sweep;
  // every retained exponent is <= 0.
  std::vector<double> J_e(n + 1, 0.0), J_c(n, 0.0);
  const auto step_down = [&](double p, double q, double phi_p, double phi_q,
                             double J_q, double fv) {
    double J_p = std::exp(lp * (phi_p - phi_q)) * J_q;
    if (fv != 0.0 && p < q) {
      const double mid = 0.5 * (p + q), half = 0.5 * (q - p);
      double local = 0.0;
      for (int g = 0; g < 4; ++g) {
        const double r = mid + half * detail::kGL4Node[g];
        const double phi_r =
            linear ? phi_closed(r)
                   : phi_q + detail::phi_increment(flow, r, q);
        local += detail::kGL4Weight[g] * std::exp(lp * (phi_p - phi_r));
      }
      J_p += fv * local * half;
    }
    return J_p;
  };
  for (int i = n - 1; i >= 0; --i) {
    const double J_above = J_e[i + 1], phi_above = phi_e[i + 1];
    J_c[i] = step_down(grid.center(i), grid.right(i), phi_c[i], phi_above, J_above,
                       f.values[i]);
    J_e[i] = step_down(grid.left(i), grid.center(i), phi_e[i], phi_c[i], J_c[i],
                       f.values[i]);
  }

  // split R f = I * U + V and fix I from I = int_K^M R f dx
  const auto U_at = [&](double phi, double x) {
    return x <= 0.0 ? 0.0 : -lam * std::exp(lp * phi) / flow.g(x);
  };
  const auto V_at = [&](double J, double x) {
    return x <= 0.0 ? 0.0 : -J / flow.g(x);
  };
  std::vector<double> U_bar(n), V_bar(n);
  for (int i = 0; i < n; ++i) {
    const double Ue_lo = i > 0 ? U_at(phi_e[i], grid.left(i)) : U_at(phi_c[0], grid.center(0));
    const double Ve_lo = i > 0 ? V_at(J_e[i], grid.left(i)) : V_at(J_c[0], grid.center(0));
    U_bar[i] = (Ue_lo + 4.0 * U_at(phi_c[i], grid.center(i)) +
                U_at(phi_e[i + 1], grid.right(i))) / 6.0;
    V_bar[i] = (Ve_lo + 4.0 * V_at(J_c[i], grid.center(i)) +
                V_at(J_e[i + 1], grid.right(i))) / 6.0;
  }

  double H = 0.0;
  for (int i = 0; i < n; ++i) {
    const double over = std::max(0.0, std::min(grid.right(i), M) - std::max(grid.left(i), K));
    H += V_bar[i] * over;
  }
  const double G = (1.0 - std::exp(lp * phi_K)) / lp; // int_K^M -e^{lp phi}/g dx
  const double denom = 1.0 - lam * G;                 // > mu/(mu+lambda) > 0
  const double I = H / denom;

  ResolventResult out(grid);
  out.plateau_integral = I;
  for (int i = 0; i < n; ++i) out.values.values[i] = I * U_bar[i] + V_bar[i];
  return out;
}

} // namespace titerlab

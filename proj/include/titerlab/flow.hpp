#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "titerlab/expr.hpp"
#include "titerlab/phase_space.hpp"
#include "titerlab/report.hpp"

namespace titerlab {

namespace detail {

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double ceiling = std::numeric_limits<double>::infinity();
};

struct OdeOutcome {
  double value = 0.0;
  bool ceiling_hit = false;
};

// Scalar Dormand-Prince 5(4) with standard step-size control. Aborts early
// when the solution exceeds opts.ceiling (used for backward blow-up detection).
template <class F>
OdeOutcome integrate_dp45(F&& rhs, double x0, double t_end, const OdeOptions& opts) {
  if (t_end == 0.0) return {x0, false};

  // Butcher tableau (Dormand-Prince 5(4)).
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // 4th-order embedded weights.
  constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                   e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

  double t = 0.0;
  double x = x0;
  double k1 = rhs(x);
  double h = t_end / 16.0;
  const double h_min = t_end * 1e-14;
  int rejected_in_a_row = 0;

  while (t < t_end) {
    if (h > t_end - t) h = t_end - t;
    const double k2 = rhs(x + h * a21 * k1);
    const double k3 = rhs(x + h * (a31 * k1 + a32 * k2));
    const double k4 = rhs(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = rhs(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 = rhs(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double x5 = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double k7 = rhs(x5);
    const double x4 = x + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double scale = opts.abs_tol + opts.rel_tol * std::max(std::abs(x), std::abs(x5));
    const double err = std::abs(x5 - x4) / scale;

    if (err <= 1.0 || h <= h_min) {
      t += h;
      x = x5;
      k1 = k7;  // FSAL
      rejected_in_a_row = 0;
      if (x > opts.ceiling) return {x, true};
      if (!std::isfinite(x)) return {x, true};
    } else {
      ++rejected_in_a_row;
      if (rejected_in_a_row > 60)
        throw std::runtime_error("ode integration failed to find an acceptable step");
    }
    const double factor = 0.9 * std::pow(1.0 / std::max(err, 1e-10), 0.2);
    h *= std::min(5.0, std::max(0.2, factor));
  }
  return {x, false};
}

}  // namespace detail

enum class FlowFamily { LinearDecay, PowerDecay, Custom };

// Waning dynamics x' = g(x) with g(0)=0 and g<0 on (0,inf). Provides the flow
// pi_t, its inverse-time flow, and the spatial derivative of pi_t. Closed forms
// are used for the linear and power families; custom flows fall back to an
// adaptive embedded Runge-Kutta integration.
class FlowModel {
public:
  static FlowModel linear_decay(double a, PhaseSpace domain = PhaseSpace::half_line()) {
    if (!(a > 0)) throw std::invalid_argument("linear_decay: rate a must be > 0");
    FlowModel m(FlowFamily::LinearDecay, domain);
    m.a_ = a;
    m.describe_ = "linear_decay(a=" + num(a) + ")";
    return m;
  }

  static FlowModel power_decay(double a, double p, PhaseSpace domain = PhaseSpace::half_line()) {
    if (!(a > 0)) throw std::invalid_argument("power_decay: rate a must be > 0");
    if (!(p > 1)) throw std::invalid_argument("power_decay: exponent p must be > 1");
    FlowModel m(FlowFamily::PowerDecay, domain);
    m.a_ = a;
    m.p_ = p;
    m.describe_ = "power_decay(a=" + num(a) + ",p=" + num(p) + ")";
    return m;
  }

  static FlowModel custom(std::function<double(double)> g, std::function<double(double)> dg,
                          PhaseSpace domain = PhaseSpace::half_line(),
                          std::string description = "custom") {
    if (!g || !dg) throw std::invalid_argument("custom flow: g and g' are both required");
    FlowModel m(FlowFamily::Custom, domain);
    m.g_fn_ = std::move(g);
    m.dg_fn_ = std::move(dg);
    m.describe_ = std::move(description);
    return m;
  }

  static FlowModel custom(const Expr& g, PhaseSpace domain = PhaseSpace::half_line()) {
    Expr dg = g.derivative();
    return custom([g](double x) { return g(x); }, [dg](double x) { return dg(x); }, domain,
                  "custom(" + g.text() + ")");
  }

  FlowFamily family() const { return family_; }
  const PhaseSpace& domain() const { return domain_; }
  double rate() const { return a_; }      // LinearDecay / PowerDecay
  double exponent() const { return p_; }  // PowerDecay
  const std::string& describe() const { return describe_; }

  double g(double x) const {
    switch (family_) {
      case FlowFamily::LinearDecay: return -a_ * x;
      case FlowFamily::PowerDecay: return -a_ * std::pow(x, p_);
      case FlowFamily::Custom: return g_fn_(x);
    }
    return 0.0;
  }

  double dg(double x) const {
    switch (family_) {
      case FlowFamily::LinearDecay: return -a_;
      case FlowFamily::PowerDecay: return -a_ * p_ * std::pow(x, p_ - 1.0);
      case FlowFamily::Custom: return dg_fn_(x);
    }
    return 0.0;
  }

  // pi_t x0. Non-increasing in t and stays >= 0.
  double advance(double x0, double t) const {
    check_state(x0, "advance");
    check_time(t, "advance");
    if (t == 0.0 || x0 == 0.0) return x0;
    switch (family_) {
      case FlowFamily::LinearDecay:
        return x0 * std::exp(-a_ * t);
      case FlowFamily::PowerDecay: {
        // x(t) = x0 (1 + a(p-1) t x0^(p-1))^(-1/(p-1))
        const double w = 1.0 + a_ * (p_ - 1.0) * t * std::pow(x0, p_ - 1.0);
        return x0 * std::pow(w, -1.0 / (p_ - 1.0));
      }
      case FlowFamily::Custom: {
        detail::OdeOptions opts{ode_abs_tol_, ode_rel_tol_,
                                std::numeric_limits<double>::infinity()};
        auto out = detail::integrate_dp45([this](double x) { return g_fn_(x); }, x0, t, opts);
        return std::max(out.value, 0.0);
      }
    }
    return x0;
  }

  // Inverse-time flow: the y with pi_t y = x, or nullopt when the backward
  // solution blows up / leaves the phase space before time t.
  std::optional<double> advance_back(double x, double t) const {
    check_state(x, "advance_back");
    check_time(t, "advance_back");
    if (t == 0.0 || x == 0.0) return x;
    const double ceiling = domain_.bounded() ? domain_.upper() : backward_ceiling_;
    switch (family_) {
      case FlowFamily::LinearDecay: {
        const double y = x * std::exp(a_ * t);
        if (y > ceiling) return std::nullopt;
        return y;
      }
      case FlowFamily::PowerDecay: {
        // y^(1-p) = x^(1-p) - a(p-1)t; blow-up when the right side hits 0.
        const double s = std::pow(x, 1.0 - p_) - a_ * (p_ - 1.0) * t;
        if (!(s > 0)) return std::nullopt;
        const double y = std::pow(s, -1.0 / (p_ - 1.0));
        if (y > ceiling) return std::nullopt;
        return y;
      }
      case FlowFamily::Custom: {
        detail::OdeOptions opts{ode_abs_tol_, ode_rel_tol_, ceiling};
        auto out = detail::integrate_dp45([this](double x_) { return -g_fn_(x_); }, x, t, opts);
        if (out.ceiling_hit) return std::nullopt;
        return out.value;
      }
    }
    return std::nullopt;
  }

  // d(pi_t x)/dx = g(pi_t x) / g(x); defined for x > 0.
  double jacobian(double x, double t) const {
    if (!(x > 0)) throw std::domain_error("flow jacobian: requires x > 0");
    check_time(t, "jacobian");
    const double gx = g(x);
    if (gx == 0.0) throw std::domain_error("flow jacobian: g vanishes at x");
    return g(advance(x, t)) / gx;
  }

  // Samples a log-spaced grid and checks g(0)=0, g<0 on (0,.), and that the
  // supplied derivative is consistent with central finite differences.
  ValidationReport validate() const {
    ValidationReport report;
    const double g0 = g(0.0);
    report.add("g(0)=0", std::abs(g0) <= 1e-12, "g(0) = " + num(g0));

    const double x_hi = domain_.bounded() ? domain_.upper() : 1e3;
    const double x_lo = x_hi * 1e-9;
    const int n = 48;
    bool negative_ok = true;
    std::string witness;
    for (int i = 0; i < n; ++i) {
      const double x = x_lo * std::pow(x_hi / x_lo, double(i) / (n - 1));
      if (!(g(x) < 0)) {
        negative_ok = false;
        witness = "g(" + num(x) + ") = " + num(g(x));
        break;
      }
    }
    report.add("g<0 on (0,.)", negative_ok, witness);

    bool deriv_ok = true;
    std::string deriv_witness;
    for (int i = 0; i < n; ++i) {
      const double x = x_lo * std::pow(x_hi / x_lo, double(i) / (n - 1));
      const double h = 1e-4 * x;
      const double fd = (g(x + h) - g(x - h)) / (2 * h);
      const double an = dg(x);
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
      if (std::abs(fd - an) / denom > 1e-4) {
        deriv_ok = false;
        deriv_witness = "at x=" + num(x) + ": g'=" + num(an) + " vs fd=" + num(fd);
        break;
      }
    }
    report.add("g' consistent with finite differences", deriv_ok, deriv_witness);
    return report;
  }

  double backward_ceiling() const { return backward_ceiling_; }
  void set_backward_ceiling(double c) {
    if (!(c > 0)) throw std::invalid_argument("backward ceiling must be > 0");
    backward_ceiling_ = c;
  }

  void set_ode_tolerances(double abs_tol, double rel_tol) {
    if (!(abs_tol > 0) || !(rel_tol > 0))
      throw std::invalid_argument("ode tolerances must be > 0");
    ode_abs_tol_ = abs_tol;
    ode_rel_tol_ = rel_tol;
  }

private:
  FlowModel(FlowFamily family, PhaseSpace domain) : family_(family), domain_(domain) {}

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
  }

  void check_state(double x, const char* where) const {
    if (!std::isfinite(x) || !domain_.contains(x))
      throw std::invalid_argument(std::string(where) + ": state " + num(x) +
                                  " outside phase space " + domain_.describe());
  }

  static void check_time(double t, const char* where) {
    if (!std::isfinite(t) || t < 0)
      throw std::invalid_argument(std::string(where) + ": time must be finite and >= 0");
  }

  FlowFamily family_;
  PhaseSpace domain_;
  double a_ = 0.0;
  double p_ = 0.0;
  std::function<double(double)> g_fn_;
  std::function<double(double)> dg_fn_;
  std::string describe_;
  double backward_ceiling_ = 1e12;
  double ode_abs_tol_ = 1e-10;
  double ode_rel_tol_ = 1e-8;
};

}  // namespace titerlab

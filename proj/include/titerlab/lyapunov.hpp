#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <titerlab/expr.hpp>
#include <titerlab/model.hpp>
#include <titerlab/report.hpp>
#include <titerlab/util.hpp>

namespace titerlab {

// Test functions for drift arguments.  The extended generator acts on
// these, not on densities:
//
//   L V(x) = g(x) V'(x) + lambda ( V(Q(x)) - V(x) ),
//
// and negativity of L V outside a compact set is the stability
// certificate.

enum class LyapunovFamily { Identity, Power, Custom };

class LyapunovFunction {
public:
  static LyapunovFunction identity() { return LyapunovFunction(LyapunovFamily::Identity, 1.0); }

  static LyapunovFunction power(double gamma) {
    if (!(gamma > 0.0))
      throw std::invalid_argument("LyapunovFunction::power: gamma must be positive");
    return LyapunovFunction(LyapunovFamily::Power, gamma);
  }

  static LyapunovFunction custom(const Expr& v) {
    LyapunovFunction f(LyapunovFamily::Custom, 1.0);
    f.v_ = v;
    f.dv_ = v.derivative();
    return f;
  }

  double operator()(double x) const {
    switch (family_) {
      case LyapunovFamily::Identity: return x;
      case LyapunovFamily::Power: return std::pow(x, gamma_);
      case LyapunovFamily::Custom: return (*v_)(x);
    }
    return 0.0;
  }

  double deriv(double x) const {
    switch (family_) {
      case LyapunovFamily::Identity: return 1.0;
      case LyapunovFamily::Power: return gamma_ * std::pow(x, gamma_ - 1.0);
      case LyapunovFamily::Custom: return (*dv_)(x);
    }
    return 0.0;
  }

  LyapunovFamily family() const { return family_; }
  double gamma() const { return gamma_; }

  std::string describe() const {
    switch (family_) {
      case LyapunovFamily::Identity: return "V(x) = x";
      case LyapunovFamily::Power: return "V(x) = x^" + detail::num(gamma_);
      case LyapunovFamily::Custom: return "V(x) = " + v_->text();
    }
    return "";
  }

  ValidationReport validate(const PhaseSpace& space) const {
    ValidationReport report;
    const double hi = space.bounded() ? space.upper() : 1e3;
    auto xs = detail::linspace(hi * 1e-3, hi, 101);
    bool nonneg = true;
    double bad_x = 0.0;
    for (double x : xs)
      if (!((*this)(x) >= 0.0)) {
        nonneg = false;
        bad_x = x;
        break;
      }
    if ((*this)(0.0) < 0.0) {
      nonneg = false;
      bad_x = 0.0;
    }
    report.add("V >= 0", nonneg,
               nonneg ? "" : "V(" + detail::num(bad_x) + ") = " + detail::num((*this)(bad_x)));
    bool smooth = true;
    std::string note;
    for (double x : xs) {
      const double h = 1e-5 * x;
      const double fd = ((*this)(x + h) - (*this)(x - h)) / (2.0 * h);
      const double an = deriv(x);
      if (std::fabs(fd - an) > 1e-4 * std::max(1.0, std::fabs(an))) {
        smooth = false;
        note = "V' mismatch at x = " + detail::num(x);
        break;
      }
    }
    report.add("V' consistent with finite differences", smooth, note);
    return report;
  }

private:
  LyapunovFunction(LyapunovFamily family, double gamma) : family_(family), gamma_(gamma) {}

  LyapunovFamily family_;
  double gamma_;
  std::optional<Expr> v_, dv_;
};

// L V(x); the flow term is zero wherever g vanishes, which also covers
// V' blowing up at the origin for sub-linear powers.
inline double generator_apply(const ModelSpec& model, const LyapunovFunction& V, double x) {
  if (!model.phase_space.contains(x))
    throw std::invalid_argument("generator_apply: x outside the phase space");
  const double gx = model.flow.g(x);
  const double flow_term = gx == 0.0 ? 0.0 : gx * V.deriv(x);
  return flow_term + model.lambda * (V(model.boost.apply(x)) - V(x));
}

struct DriftReport {
  double r = 0.0;
  double m_bar = 0.0;            // sup of L V below r
  double epsilon = 0.0;          // -sup of L V on [r, X]; positive certifies drift
  double limsup_estimate = 0.0;  // sup of L V over the top sampled decade
  bool satisfied = false;
  bool inconclusive = false;     // L V changes sign repeatedly in the top decade
  std::string detail;
};

inline DriftReport check_drift(const ModelSpec& model, const LyapunovFunction& V, double r,
                               const std::vector<double>& x_samples) {
  if (!(r > 0.0)) throw std::invalid_argument("check_drift: r must be positive");
  if (x_samples.empty()) throw std::invalid_argument("check_drift: no sample points");

  std::vector<double> xs(x_samples);
  std::sort(xs.begin(), xs.end());
  if (xs.back() < r)
    throw std::invalid_argument("check_drift: samples must reach past r");

  DriftReport rep;
  rep.r = r;
  const double X = xs.back();
  double sup_low = -std::numeric_limits<double>::infinity();
  double sup_tail = sup_low, sup_decade = sup_low;
  int sign_changes = 0, prev_sign = 0;
  for (double x : xs) {
    const double lv = generator_apply(model, V, x);
    if (x < r) sup_low = std::max(sup_low, lv);
    else sup_tail = std::max(sup_tail, lv);
    if (x >= X / 10.0) {
      sup_decade = std::max(sup_decade, lv);
      const int s = lv > 0.0 ? 1 : (lv < 0.0 ? -1 : 0);
      if (s != 0 && prev_sign != 0 && s != prev_sign) ++sign_changes;
      if (s != 0) prev_sign = s;
    }
  }
  rep.m_bar = sup_low;
  rep.epsilon = -sup_tail;
  rep.limsup_estimate = sup_decade;
  rep.inconclusive = sign_changes >= 2;
  rep.satisfied = sup_tail < 0.0 && sup_decade < 0.0 && !rep.inconclusive;
  rep.detail = V.describe() + ": sup LV on [r, " + detail::num(X) +
               "] = " + detail::num(sup_tail) + ", top-decade sup = " +
               detail::num(sup_decade);
  return rep;
}

} // namespace titerlab

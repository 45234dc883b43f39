#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "titerlab/expr.hpp"
#include "titerlab/phase_space.hpp"
#include "titerlab/report.hpp"
#include "titerlab/util.hpp"

namespace titerlab {

enum class BoostFamily { Additive, Affine, Saturating, Plateau, CustomPieces };

// Which set of structural assumptions the map is meant to satisfy:
//   A      on the half-line, Q(x) > x everywhere, nonsingular;
//   B      on [0,M], Q(x) > x below M, Q(M) = M, nonsingular;
//   BPrime on [0,M], x < Q(x) < M below K, Q constant = M on [K,M].
enum class AssumptionProfile { A, B, BPrime };

// One monotone invertible piece of the jump map.
struct BoostBranch {
  double lo = 0, hi = 0;          // domain piece
  double img_lo = 0, img_hi = 0;  // image interval, sorted
  bool increasing = true;
  std::function<double(double)> forward;
  std::function<double(double)> deriv;
  std::function<double(double)> inverse;  // image -> domain piece
};

// Post-infection jump map Q. Holds the branch decomposition used by the
// transfer-operator machinery; a constant plateau segment, when present, is
// carried separately since it has no invertible branch.
class BoostMap {
public:
  static BoostMap additive(double L) {
    if (!(L > 0)) throw std::invalid_argument("additive boost: L must be > 0");
    BoostMap q(BoostFamily::Additive, PhaseSpace::half_line(), AssumptionProfile::A);
    q.L_ = L;
    const double inf = std::numeric_limits<double>::infinity();
    q.branches_.push_back(BoostBranch{
        0, inf, L, inf, true, [L](double x) { return x + L; }, [](double) { return 1.0; },
        [L](double y) { return y - L; }});
    q.describe_ = "additive_boost(L=" + detail::num(L) + ")";
    return q;
  }

  static BoostMap affine(double b, double c) {
    if (!(b >= 1)) throw std::invalid_argument("affine boost: slope b must be >= 1");
    if (!(c > 0)) throw std::invalid_argument("affine boost: offset c must be > 0");
    BoostMap q(BoostFamily::Affine, PhaseSpace::half_line(), AssumptionProfile::A);
    q.b_ = b;
    q.c_ = c;
    const double inf = std::numeric_limits<double>::infinity();
    q.branches_.push_back(BoostBranch{
        0, inf, c, inf, true, [b, c](double x) { return b * x + c; },
        [b](double) { return b; }, [b, c](double y) { return (y - c) / b; }});
    q.describe_ = "affine_boost(b=" + detail::num(b) + ",c=" + detail::num(c) + ")";
    return q;
  }

  // Q(x) = x + theta (M - x): moves a fixed fraction of the distance to the
  // ceiling. theta = 0 is accepted so the validator can exhibit the failure.
  static BoostMap saturating(double M, double theta) {
    if (!(M > 0)) throw std::invalid_argument("saturating boost: M must be > 0");
    if (!(theta >= 0 && theta < 1))
      throw std::invalid_argument("saturating boost: theta must lie in [0,1)");
    BoostMap q(BoostFamily::Saturating, PhaseSpace::interval(M), AssumptionProfile::B);
    q.M_ = M;
    q.theta_ = theta;
    const double s = 1 - theta;
    q.branches_.push_back(BoostBranch{
        0, M, theta * M, M, true, [s, theta, M](double x) { return s * x + theta * M; },
        [s](double) { return s; }, [s, theta, M](double y) { return (y - theta * M) / s; }});
    q.describe_ =
        "saturating_boost(M=" + detail::num(M) + ",theta=" + detail::num(theta) + ")";
    return q;
  }

  // Monotone inner branch on [0,K), hard ceiling Q = M on [K,M].
  static BoostMap plateau(double K, double M, const Expr& inner) {
    Expr d = inner.derivative();
    return plateau(K, M, [inner](double x) { return inner(x); },
                   [d](double x) { return d(x); }, "plateau_boost(" + inner.text() + ")");
  }

  static BoostMap plateau(double K, double M, std::function<double(double)> inner,
                          std::function<double(double)> inner_deriv,
                          std::string description = "plateau_boost") {
    if (!(M > 0) || !(K > 0 && K < M))
      throw std::invalid_argument("plateau boost: need 0 < K < M");
    if (!inner || !inner_deriv)
      throw std::invalid_argument("plateau boost: inner branch and derivative required");
    BoostMap q(BoostFamily::Plateau, PhaseSpace::interval(M), AssumptionProfile::BPrime);
    q.M_ = M;
    q.K_ = K;
    BoostBranch br;
    br.lo = 0;
    br.hi = K;
    br.forward = inner;
    br.deriv = std::move(inner_deriv);
    const double v0 = inner(0.0), vK = inner(K);
    br.increasing = vK > v0;
    br.img_lo = std::min(v0, vK);
    br.img_hi = std::max(v0, vK);
    br.inverse = bisect_inverse(br.forward, br.lo, br.hi, br.increasing);
    q.branches_.push_back(std::move(br));
    q.plateau_lo_ = K;
    q.plateau_hi_ = M;
    q.describe_ = std::move(description);
    return q;
  }

  struct Piece {
    double lo, hi;
    Expr map;
  };

  static BoostMap custom_pieces(std::vector<Piece> pieces,
                                PhaseSpace domain = PhaseSpace::half_line()) {
    if (pieces.empty()) throw std::invalid_argument("custom boost: no pieces given");
    BoostMap q(BoostFamily::CustomPieces, domain,
               domain.bounded() ? AssumptionProfile::B : AssumptionProfile::A);
    double expect_lo = 0.0;
    for (const auto& p : pieces) {
      if (std::abs(p.lo - expect_lo) > 1e-12)
        throw std::invalid_argument("custom boost: pieces must tile the space from 0");
      if (!(p.hi > p.lo)) throw std::invalid_argument("custom boost: empty piece");
      expect_lo = p.hi;
      BoostBranch br;
      br.lo = p.lo;
      br.hi = p.hi;
      Expr f = p.map;
      Expr d = f.derivative();
      br.forward = [f](double x) { return f(x); };
      br.deriv = [d](double x) { return d(x); };
      const double eval_hi = std::isfinite(p.hi) ? p.hi : p.lo + 1e6;
      const double v0 = br.forward(p.lo), v1 = br.forward(eval_hi);
      br.increasing = v1 > v0;
      if (std::isfinite(p.hi)) {
        br.img_lo = std::min(v0, v1);
        br.img_hi = std::max(v0, v1);
      } else {
        br.img_lo = br.increasing ? v0 : -std::numeric_limits<double>::infinity();
        br.img_hi = br.increasing ? std::numeric_limits<double>::infinity() : v0;
      }
      br.inverse = bisect_inverse(br.forward, br.lo, br.hi, br.increasing);
      q.branches_.push_back(std::move(br));
    }
    const double cover = q.branches_.back().hi;
    const double need = domain.bounded() ? domain.upper()
                                         : std::numeric_limits<double>::infinity();
    if (cover < need)
      throw std::invalid_argument("custom boost: pieces do not cover the phase space");
    q.describe_ = "custom_boost(" + std::to_string(pieces.size()) + " pieces)";
    return q;
  }

  BoostFamily family() const { return family_; }
  AssumptionProfile profile() const { return profile_; }
  const PhaseSpace& domain() const { return domain_; }
  const std::vector<BoostBranch>& branches() const { return branches_; }
  const std::string& describe() const { return describe_; }

  bool has_plateau() const { return plateau_hi_ > plateau_lo_; }
  double plateau_lo() const { return plateau_lo_; }
  double plateau_hi() const { return plateau_hi_; }
  double plateau_value() const { return M_; }

  double L() const { return L_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double M() const { return M_; }
  double theta() const { return theta_; }
  double K() const { return K_; }

  double apply(double x) const {
    if (!std::isfinite(x) || !domain_.contains(x))
      throw std::invalid_argument("boost apply: state " + detail::num(x) +
                                  " outside phase space " + domain_.describe());
    if (has_plateau() && x >= plateau_lo_) return M_;
    for (const auto& br : branches_)
      if (x >= br.lo && (x < br.hi || &br == &branches_.back())) return br.forward(x);
    return branches_.back().forward(x);
  }

  double derivative(double x) const {
    if (!std::isfinite(x) || !domain_.contains(x))
      throw std::invalid_argument("boost derivative: state outside phase space");
    if (has_plateau() && x >= plateau_lo_) return 0.0;
    for (const auto& br : branches_)
      if (x >= br.lo && (x < br.hi || &br == &branches_.back())) return br.deriv(x);
    return branches_.back().deriv(x);
  }

  // Transfer-operator action on a density, branch form:
  //   (P f)(x) = sum over branches with x in the image of f(inv(x)) / |Q'(inv(x))|.
  // A plateau contributes an atom at M, not a density; only the invertible
  // part is summed here, so for plateau maps this operator is substochastic.
  // When x sits exactly on a shared image boundary the earlier branch counts.
  double fp_apply_analytic(const std::function<double(double)>& f, double x) const {
    if (branches_.empty())
      throw std::runtime_error("fp_apply: map has no invertible branch structure");
    double acc = 0.0;
    for (std::size_t i = 0; i < branches_.size(); ++i) {
      const auto& br = branches_[i];
      if (x < br.img_lo || x > br.img_hi) continue;
      if (i > 0 && x == br.img_lo && branches_[i - 1].img_hi == x) continue;
      double y = br.inverse(x);
      y = std::min(std::max(y, br.lo), std::min(br.hi, 1e300));
      const double dq = br.deriv(y);
      if (dq == 0.0)
        throw std::runtime_error("fp_apply: vanishing branch derivative at " +
                                 detail::num(y));
      acc += f(y) / std::abs(dq);
    }
    return acc;
  }

  double koopman_apply(const std::function<double(double)>& h, double x) const {
    return h(apply(x));
  }

  ValidationReport validate() const { return validate(profile_); }

  // Per-assumption pass/fail with witnesses. The profile states what the map
  // is supposed to satisfy; a plateau map judged against profile B is the
  // canonical failure (the level set of M has positive measure).
  ValidationReport validate(AssumptionProfile profile) const {
    ValidationReport report;

    const double q0 = apply(0.0);
    report.add("Q(0)>0", q0 > 0, "Q(0) = " + detail::num(q0));

    report.add_all(check_growth(profile));

    if (profile != AssumptionProfile::A) {
      const double qM = apply(M_);
      report.add("Q(M)=M", std::abs(qM - M_) <= 1e-9 * M_, "Q(M) = " + detail::num(qM));
    }

    bool nonsing = true;
    std::string ns_witness;
    for (const auto& br : branches_) {
      for (double x : piece_samples(br)) {
        if (std::abs(br.deriv(x)) < 1e-12) {
          nonsing = false;
          ns_witness = "Q'(" + detail::num(x) + ") = 0";
          break;
        }
      }
      if (!nonsing) break;
    }
    report.add("branch derivatives nonzero", nonsing, ns_witness);

    if (profile == AssumptionProfile::BPrime) {
      bool plat_ok = has_plateau() && std::abs(plateau_lo_ - K_) < 1e-12;
      report.add("Q=M on [K,M]", plat_ok,
                 plat_ok ? "" : "no constant segment covering [K,M]");
      bool below = true;
      std::string wit;
      for (double x : detail::linspace(0.0, K_ * (1 - 1e-9), 64)) {
        const double q = apply(x);
        if (!(q < M_)) {
          below = false;
          wit = "Q(" + detail::num(x) + ") = " + detail::num(q) + " >= M";
          break;
        }
      }
      report.add("Q<M before the plateau", below, wit);
    } else {
      // Nonsingularity in the measure-theoretic sense: no level set of
      // positive measure. A constant segment is exactly such a set.
      bool no_flat = !has_plateau();
      std::string wit = no_flat ? ""
                                : "witness A={" + detail::num(M_) + "}: preimage [" +
                                      detail::num(plateau_lo_) + "," +
                                      detail::num(plateau_hi_) +
                                      "] has positive measure";
      if (no_flat) {
        for (const auto& br : branches_) {
          auto xs = piece_samples(br);
          int flat_run = 0;
          for (double x : xs) {
            flat_run = std::abs(br.deriv(x)) < 1e-12 ? flat_run + 1 : 0;
            if (flat_run >= 2) {
              no_flat = false;
              wit = "Q constant near x = " + detail::num(x);
              break;
            }
          }
          if (!no_flat) break;
        }
      }
      report.add("no positive-measure level set", no_flat, wit);
    }

    if (domain_.bounded()) {
      bool in_range = true;
      std::string wit;
      for (double x : detail::linspace(0.0, M_, 129)) {
        const double q = apply(x);
        if (q > M_ * (1 + 1e-12) || q < 0) {
          in_range = false;
          wit = "Q(" + detail::num(x) + ") = " + detail::num(q) + " leaves [0,M]";
          break;
        }
      }
      report.add("range inside phase space", in_range, wit);
    }
    return report;
  }

private:
  BoostMap(BoostFamily family, PhaseSpace domain, AssumptionProfile profile)
      : family_(family), domain_(domain), profile_(profile) {}

  static std::function<double(double)> bisect_inverse(std::function<double(double)> fwd,
                                                      double lo, double hi,
                                                      bool increasing) {
    return [fwd = std::move(fwd), lo, hi, increasing](double y) {
      double a = lo;
      double b = hi;
      if (!std::isfinite(b)) {
        b = std::max(2 * a + 1.0, 1.0);
        while ((increasing ? fwd(b) < y : fwd(b) > y) && b < 1e300) b *= 2;
      }
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (!(mid > a && mid < b)) break;
        const bool go_right = increasing ? fwd(mid) < y : fwd(mid) > y;
        (go_right ? a : b) = mid;
        if (b - a <= 1e-15 * std::max(1.0, std::abs(b))) break;
      }
      return 0.5 * (a + b);
    };
  }

  std::vector<double> piece_samples(const BoostBranch& br) const {
    const double hi = std::isfinite(br.hi)
                          ? br.hi
                          : std::max(10.0 * (std::abs(br.lo) + 1.0), 1e3);
    const double span = hi - br.lo;
    std::vector<double> xs;
    for (double u : detail::linspace(0.0, 1.0, 33))
      xs.push_back(br.lo + span * (1e-9 + (1 - 2e-9) * u));
    return xs;
  }

  ValidationReport check_growth(AssumptionProfile profile) const {
    ValidationReport r;
    bool ok = true;
    std::string wit;
    double hi;
    switch (profile) {
      case AssumptionProfile::A:
        hi = 1e3;
        break;
      case AssumptionProfile::B:
        hi = M_ * (1 - 1e-9);
        break;
      case AssumptionProfile::BPrime:
        hi = K_ * (1 - 1e-9);
        break;
    }
    std::vector<double> xs = detail::linspace(0.0, hi, 257);
    if (profile == AssumptionProfile::A) {
      auto more = detail::logspace(1e-6, hi, 64);
      xs.insert(xs.end(), more.begin(), more.end());
    }
    for (double x : xs) {
      if (!(apply(x) > x)) {
        ok = false;
        wit = "Q(" + detail::num(x) + ") = " + detail::num(apply(x)) + " <= x";
        break;
      }
    }
    r.add("Q(x)>x on required region", ok, wit);
    return r;
  }

  BoostFamily family_;
  PhaseSpace domain_;
  AssumptionProfile profile_;
  std::vector<BoostBranch> branches_;
  double plateau_lo_ = 0, plateau_hi_ = 0;
  double L_ = 0, b_ = 0, c_ = 0, M_ = 0, theta_ = 0, K_ = 0;
  std::string describe_;
};

}  // namespace titerlab

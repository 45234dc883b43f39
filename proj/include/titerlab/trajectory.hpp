#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "titerlab/model.hpp"
#include "titerlab/rng.hpp"

namespace titerlab {

struct JumpEvent {
  double time;
  double pre;   // state just before the jump
  double post;  // state just after: apply(boost, pre)
};

// Realized path skeleton: initial state plus the jump events. The state is
// right-continuous: at a jump time the path takes the post-jump value.
class TrajectoryPath {
public:
  TrajectoryPath(FlowModel flow, double x0, double t_end, std::uint64_t seed,
                 std::vector<JumpEvent> jumps)
      : flow_(std::move(flow)), x0_(x0), t_end_(t_end), seed_(seed),
        jumps_(std::move(jumps)) {}

  double x0() const { return x0_; }
  double t_end() const { return t_end_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<JumpEvent>& jumps() const { return jumps_; }

  double sample_at(double t) const {
    if (!(t >= 0) || t > t_end_)
      throw std::invalid_argument("sample_at: time outside [0, t_end]");
    // Last jump at or before t; right-continuity picks the post state at t_k.
    auto it = std::upper_bound(jumps_.begin(), jumps_.end(), t,
                               [](double v, const JumpEvent& e) { return v < e.time; });
    if (it == jumps_.begin()) return flow_.advance(x0_, t);
    const JumpEvent& e = *(it - 1);
    return flow_.advance(e.post, t - e.time);
  }

private:
  FlowModel flow_;
  double x0_;
  double t_end_;
  std::uint64_t seed_;
  std::vector<JumpEvent> jumps_;
};

inline TrajectoryPath simulate_trajectory(const ModelSpec& model, double x0, double t_end,
                                          std::uint64_t seed) {
  if (!model.phase_space.contains(x0))
    throw std::invalid_argument("simulate: x0 outside phase space");
  if (!(t_end > 0) || !std::isfinite(t_end))
    throw std::invalid_argument("simulate: t_end must be positive and finite");
  RngStream rng(seed);
  std::vector<JumpEvent> jumps;
  double t = 0.0;
  double x = x0;
  for (;;) {
    const double gap = rng.exponential(model.lambda);
    if (t + gap >= t_end) break;
    t += gap;
    const double pre = model.flow.advance(x, gap);
    const double post = model.boost.apply(pre);
    jumps.push_back({t, pre, post});
    x = post;
  }
  return TrajectoryPath(model.flow, x0, t_end, seed, std::move(jumps));
}

namespace detail {

// Event-driven walk without storing the skeleton; visit(t_seg_start, x_seg_start,
// seg_length) is called once per inter-jump segment, in order, covering [0, t_end].
template <class Visit>
void walk_path(const ModelSpec& model, double x0, double t_end, RngStream& rng,
               Visit&& visit) {
  double t = 0.0;
  double x = x0;
  for (;;) {
    const double gap = rng.exponential(model.lambda);
    if (t + gap >= t_end) {
      visit(t, x, t_end - t);
      return;
    }
    visit(t, x, gap);
    x = model.boost.apply(model.flow.advance(x, gap));
    t += gap;
  }
}

}  // namespace detail

// r(tau, t, x): flow for t - tau, jump, then flow for tau. This is the state
// at time t of a path with a single jump at time t - tau.
inline double reach(const ModelSpec& model, double tau, double t, double x) {
  if (!(tau >= 0) || !(tau <= t))
    throw std::invalid_argument("reach: need 0 <= tau <= t");
  return model.flow.advance(model.boost.apply(model.flow.advance(x, t - tau)), tau);
}

// Closed-form d(reach)/d(tau). With y the pre-jump state, Qy its image and
// r the final state:  g(r) - g(r)/g(Qy) * Q'(y) * g(y).
inline double reach_dtau(const ModelSpec& model, double tau, double t, double x) {
  if (!(tau >= 0) || !(tau <= t))
    throw std::invalid_argument("reach_dtau: need 0 <= tau <= t");
  const double y = model.flow.advance(x, t - tau);
  const double qy = model.boost.apply(y);
  const double r = model.flow.advance(qy, tau);
  const double g_qy = model.flow.g(qy);
  if (g_qy == 0.0)
    throw std::domain_error("reach_dtau: flow field vanishes at the post-jump state");
  const double g_r = model.flow.g(r);
  return g_r - (g_r / g_qy) * model.boost.derivative(y) * model.flow.g(y);
}

// One-jump lower bound for the transition probability into the interval
// [gamma_lo, gamma_hi]: rate * exp(-rate*t) * |{tau in [0,t]: r(tau,t,x) in interval}|.
// The tau-set is resolved by bracketing the endpoint crossings on a fine grid
// and bisecting each bracket.
inline double transition_lower_bound(const ModelSpec& model, double x, double t,
                                     double gamma_lo, double gamma_hi) {
  if (!(t > 0)) throw std::invalid_argument("transition bound: need t > 0");
  if (!(gamma_hi >= gamma_lo))
    throw std::invalid_argument("transition bound: empty interval");
  const int n = 256;
  std::vector<double> taus(n + 1), rs(n + 1);
  for (int i = 0; i <= n; ++i) {
    taus[i] = t * double(i) / n;
    rs[i] = reach(model, taus[i], t, x);
  }

  // Collect crossing times of both interval endpoints, then classify the
  // elementary pieces by their midpoint.
  std::vector<double> cuts{0.0, t};
  for (double level : {gamma_lo, gamma_hi}) {
    for (int i = 0; i < n; ++i) {
      const double a = rs[i] - level, b = rs[i + 1] - level;
      if (a == 0.0) cuts.push_back(taus[i]);
      if ((a < 0 && b > 0) || (a > 0 && b < 0)) {
        double lo = taus[i], hi = taus[i + 1];
        double flo = a;
        for (int it = 0; it < 80 && hi - lo > 1e-10 * std::max(t, 1.0); ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fmid = reach(model, mid, t, x) - level;
          if ((flo < 0) == (fmid < 0)) {
            lo = mid;
            flo = fmid;
          } else {
            hi = mid;
          }
        }
        cuts.push_back(0.5 * (lo + hi));
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double inside = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const double r = reach(model, mid, t, x);
    if (r >= gamma_lo && r <= gamma_hi) inside += cuts[k + 1] - cuts[k];
  }
  return model.lambda * std::exp(-model.lambda * t) * inside;
}

// Common-interval transition bound around a start point. The certificate
// provides an interval D and a level h such that P(t, x, G) >= h * |G n D|
// for every x within effective_radius of x0 and every interval G.
struct MinorizationCertificate {
  bool ok = false;
  double lo = 0, hi = 0;        // the common interval D
  double level = 0;             // density lower bound on D
  double delta = 0;             // uniform lower bound on -dr/dtau
  double m_bar = 0;             // uniform upper bound on -dr/dtau
  double tau0 = 0;              // tau window realizing the bound
  double effective_radius = 0;  // ball radius actually certified
  std::string reason;           // set when ok == false

  double width() const { return hi - lo; }
};

// Construction: bound -dr/dtau in [delta, m_bar] on [0,tau0] x ball, so each
// start point sweeps an interval of length >= delta*tau0 at speed <= m_bar;
// shrink the ball until the swept intervals share a core of length at least
// delta*tau0/3. The level is rate*exp(-rate*t)/m_bar.
inline MinorizationCertificate verify_minorization(const ModelSpec& model, double x0,
                                                   double t, double ball_radius) {
  MinorizationCertificate cert;
  if (!(x0 > 0) || !(t > 0) || !(ball_radius >= 0)) {
    cert.reason = "need x0 > 0, t > 0, ball_radius >= 0";
    return cert;
  }
  const int n_tau = 65, n_x = 33;
  double radius = std::min(ball_radius, 0.5 * x0);  // keep the ball off of 0

  double tau0 = std::min(1.0, t);
  for (int attempt = 0;; ++attempt) {
    if (attempt > 60) {
      cert.reason = "no ball radius gave a common interval";
      return cert;
    }

    double delta = std::numeric_limits<double>::infinity();
    double m_bar = 0.0;
    bool monotone = true;
    for (int ix = 0; ix < n_x && monotone; ++ix) {
      const double x = n_x == 1 ? x0 : x0 - radius + 2 * radius * double(ix) / (n_x - 1);
      for (int it = 0; it < n_tau; ++it) {
        const double tau = tau0 * double(it) / (n_tau - 1);
        const double s = -reach_dtau(model, tau, t, x);
        if (!(s > 0)) {
          monotone = false;
          break;
        }
        delta = std::min(delta, s);
        m_bar = std::max(m_bar, s);
      }
    }
    if (!monotone) {
      // The sweep speed lost its sign somewhere; a shorter tau window is the
      // standard remedy.
      tau0 *= 0.5;
      if (tau0 < 1e-6 * t) {
        cert.reason = "reach is not monotone in tau near tau=0";
        return cert;
      }
      continue;
    }

    // Swept interval per start point is [r(tau0), r(0)]; the common core is
    // bounded by the extreme endpoints over the ball.
    double core_lo = -std::numeric_limits<double>::infinity();
    double core_hi = std::numeric_limits<double>::infinity();
    for (int ix = 0; ix < n_x; ++ix) {
      const double x = n_x == 1 ? x0 : x0 - radius + 2 * radius * double(ix) / (n_x - 1);
      core_lo = std::max(core_lo, reach(model, tau0, t, x));
      core_hi = std::min(core_hi, reach(model, 0.0, t, x));
    }
    if (core_hi - core_lo >= delta * tau0 / 3.0) {
      cert.ok = true;
      cert.lo = core_lo;
      cert.hi = core_hi;
      cert.delta = delta;
      cert.m_bar = m_bar;
      cert.tau0 = tau0;
      cert.level = model.lambda * std::exp(-model.lambda * t) / m_bar;
      cert.effective_radius = radius;
      return cert;
    }
    if (radius == 0.0) {
      cert.reason = "even the single-point interval is shorter than delta*tau0/3";
      return cert;
    }
    radius *= 0.5;
    if (radius < 1e-12 * x0) radius = 0.0;
  }
}

}  // namespace titerlab

#pragma once

#include <stdexcept>
#include <utility>

#include "titerlab/boost_map.hpp"
#include "titerlab/flow.hpp"
#include "titerlab/phase_space.hpp"
#include "titerlab/report.hpp"

namespace titerlab {

// Full model: waning field, jump map, and the Poisson jump rate.
struct ModelSpec {
  FlowModel flow;
  BoostMap boost;
  double lambda;
  PhaseSpace phase_space;

  ModelSpec(FlowModel f, BoostMap q, double jump_rate)
      : flow(std::move(f)),
        boost(std::move(q)),
        lambda(jump_rate),
        phase_space(flow.domain()) {
    if (!(lambda > 0)) throw std::invalid_argument("model: jump rate must be > 0");
    if (flow.domain() != boost.domain())
      throw std::invalid_argument(
          "model: flow and jump map live on different phase spaces (" +
          flow.domain().describe() + " vs " + boost.domain().describe() + ")");
  }

  ValidationReport validate() const {
    ValidationReport r;
    r.add_all(flow.validate());
    r.add_all(boost.validate());
    r.add("jump rate positive", lambda > 0);
    if (phase_space.bounded()) {
      const double M = phase_space.upper();
      r.add("flow enters from the ceiling (g(M)<0)", flow.g(M) < 0,
            "g(M) = " + detail::num(flow.g(M)));
    }
    return r;
  }

  std::string describe() const {
    return flow.describe() + " + " + boost.describe() +
           " at rate lambda=" + detail::num(lambda) + " on " + phase_space.describe();
  }
};

}  // namespace titerlab

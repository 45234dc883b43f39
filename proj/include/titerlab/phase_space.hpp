#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace titerlab {

// State space of the antibody concentration: [0, inf) or [0, M].
class PhaseSpace {
public:
  static PhaseSpace half_line() { return PhaseSpace(std::numeric_limits<double>::infinity()); }

  static PhaseSpace interval(double upper) {
    if (!(upper > 0) || !std::isfinite(upper))
      throw std::invalid_argument("phase space: interval upper bound must be positive and finite");
    return PhaseSpace(upper);
  }

  bool bounded() const { return std::isfinite(upper_); }
  double upper() const { return upper_; }

  bool contains(double x) const { return x >= 0.0 && x <= upper_; }

  bool operator==(const PhaseSpace& o) const { return upper_ == o.upper_; }
  bool operator!=(const PhaseSpace& o) const { return !(*this == o); }

  std::string describe() const {
    if (!bounded()) return "[0,inf)";
    return "[0," + std::to_string(upper_) + "]";
  }

private:
  explicit PhaseSpace(double upper) : upper_(upper) {}
  double upper_;
};

}  // namespace titerlab

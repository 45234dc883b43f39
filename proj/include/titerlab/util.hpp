#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace titerlab::detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * double(i) / (n - 1);
  return xs;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return xs;
}

}  // namespace titerlab::detail

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace titerlab {

// One assumption / consistency check with an optional witness description.
struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  const CheckResult* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  void add(std::string name, bool passed, std::string detail = "") {
    checks.push_back({std::move(name), passed, std::move(detail)});
  }

  void add_all(const ValidationReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  }

  std::string summary() const {
    std::string out;
    for (const auto& c : checks) {
      out += c.passed ? "[pass] " : "[FAIL] ";
      out += c.name;
      if (!c.detail.empty()) {
        out += ": ";
        out += c.detail;
      }
      out += '\n';
    }
    return out;
  }
};

}  // namespace titerlab

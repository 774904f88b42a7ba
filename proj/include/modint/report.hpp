#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace modint {

/// One verified property: the measured quantity, the threshold it was held
/// to, and whether it passed. Advisory checks are reported but never fail a
/// report.
struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
  bool advisory = false;
};

struct Report {
  std::string title;
  std::vector<Check> checks;

  Check& add(std::string name, bool passed, double value, double threshold, std::string detail = {},
             bool advisory = false);
  bool passed() const;
  const Check* find(const std::string& name) const;
  nlohmann::json to_json() const;
  /// One line per check: "[PASS] name value (threshold) detail".
  std::string to_text() const;
};

}  // namespace modint

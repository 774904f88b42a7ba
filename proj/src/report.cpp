#include "modint/report.hpp"

#include <cmath>
#include <sstream>

namespace modint {

Check& Report::add(std::string name, bool passed, double value, double threshold, std::string detail, bool advisory) {
  checks.push_back(Check{std::move(name), passed, value, threshold, std::move(detail), advisory});
  return checks.back();
}

bool Report::passed() const {
  for (const auto& c : checks)
    if (!c.advisory && !c.passed) return false;
  return true;
}

const Check* Report::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}
}  // namespace

nlohmann::json Report::to_json() const {
  nlohmann::json j;
  j["title"] = title;
  j["passed"] = passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"passed", c.passed},
                           {"value", number(c.value)},
                           {"threshold", number(c.threshold)},
                           {"detail", c.detail},
                           {"advisory", c.advisory}});
  }
  return j;
}

std::string Report::to_text() const {
  std::ostringstream os;
  os << title << (passed() ? " [PASS]" : " [FAIL]") << '\n';
  for (const auto& c : checks) {
    os << "  [" << (c.passed ? "PASS" : (c.advisory ? "WARN" : "FAIL")) << "] " << c.name << " = " << c.value
       << " (threshold " << c.threshold << ")";
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  return os.str();
}

}  // namespace modint

#include "modint/torus.hpp"

#include <cassert>

namespace modint {

void wrap_point(std::span<double> x) noexcept {
  for (double& c : x) c = wrap(c);
}

Vec torus_displacement(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size() && x.size() <= kMaxDim);
  Vec v{};
  for (std::size_t j = 0; j < x.size(); ++j) v[j] = wrap(x[j] - y[j]);
  return v;
}

double torus_distance(std::span<const double> x, std::span<const double> y) {
  const Vec v = torus_displacement(x, y);
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += v[j] * v[j];
  return std::sqrt(s);
}

}  // namespace modint

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

namespace modint {

/// Largest torus dimension supported by the fixed-size vector type.
inline constexpr std::size_t kMaxDim = 3;

/// Small fixed-capacity vector; only the first `d` entries are meaningful.
using Vec = std::array<double, kMaxDim>;

/// Wraps a coordinate into the fundamental domain [-1/2, 1/2).
inline double wrap(double x) noexcept {
  double r = x - std::floor(x + 0.5);
  // x + 0.5 can round up to an integer for x just below 1/2
  if (r >= 0.5) r -= 1.0;
  if (r < -0.5) r += 1.0;
  return r;
}

void wrap_point(std::span<double> x) noexcept;

/// Minimal-image vector v with wrap(y + v) = x, each component in [-1/2, 1/2).
Vec torus_displacement(std::span<const double> x, std::span<const double> y);

double torus_distance(std::span<const double> x, std::span<const double> y);

}  // namespace modint

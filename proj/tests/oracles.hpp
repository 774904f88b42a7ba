#pragma once

// Test-side reference computations, written independently of the library.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

// composite Simpson on [a, b] with m (even) panels
inline double simpson(const std::function<double(double)>& f, double a, double b, int m = 20000) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double phi(double t) {
  if (std::abs(t) >= 0.5) return 0.0;
  static const double norm = simpson([](double u) { double q = 1.0 - 4.0 * u * u; return q * q * q; }, -0.5, 0.5);
  const double s = 1.0 - 4.0 * t * t;
  return s * s * s / norm;
}

// scaled 1-d kernel n^beta phi(n^beta x), evaluated at the minimal image
inline double w1d(double x, double n, double beta) {
  x -= std::round(x);
  const double s = std::pow(n, beta);
  return s * phi(s * x);
}

// minimal image by enumerating the 3^d candidate shifts
template <std::size_t D>
std::array<double, D> min_image(const std::array<double, D>& x, const std::array<double, D>& y) {
  std::array<double, D> best{};
  double best_norm = std::numeric_limits<double>::infinity();
  std::array<int, D> shift{};
  for (int code = 0; code < int(std::pow(3, D)); ++code) {
    int c = code;
    for (std::size_t j = 0; j < D; ++j) {
      shift[j] = c % 3 - 1;
      c /= 3;
    }
    std::array<double, D> v{};
    double nn = 0.0;
    for (std::size_t j = 0; j < D; ++j) {
      v[j] = x[j] - y[j] + shift[j];
      nn += v[j] * v[j];
    }
    if (nn < best_norm) {
      best_norm = nn;
      best = v;
    }
  }
  return best;
}

}  // namespace oracle

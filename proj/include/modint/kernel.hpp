#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "modint/torus.hpp"

namespace modint {

/// Normalising prefactor of the one-dimensional bump, 1 / ∫(1-4t²)³ dt.
inline constexpr double kBumpPrefactor = 35.0 / 16.0;

/// phi(t) = (35/16)(1-4t²)³ on |t| <= 1/2, zero outside.
inline double bump_profile(double t) noexcept {
  const double s = 1.0 - 4.0 * t * t;
  return s > 0.0 ? kBumpPrefactor * s * s * s : 0.0;
}

inline double bump_profile_derivative(double t) noexcept {
  const double s = 1.0 - 4.0 * t * t;
  return s > 0.0 ? -24.0 * kBumpPrefactor * t * s * s : 0.0;
}

/// Largest admissible interaction exponent, d/(d+2).
inline double beta_upper_bound(int d) noexcept { return double(d) / double(d + 2); }

/// Tensor-product base mollifier w(x) = prod_j phi(x_j).
double base_kernel_eval(std::span<const double> x) noexcept;
Vec base_kernel_grad(std::span<const double> x) noexcept;

/// The scaled mollifier w^n(x) = n^beta w(n^{beta/d} x) on the d-torus.
///
/// Immutable after construction. The gradient-bound constant c, the smallest
/// c with |grad w^n|² <= c n^{beta(2/d+1)} w^n, is estimated numerically once
/// per dimension and cached in the spec.
class KernelSpec {
 public:
  /// Throws std::invalid_argument for d outside [1, kMaxDim], n == 0, or
  /// beta outside (0, d/(d+2)] unless `allow_beta_beyond_bound` is set.
  static KernelSpec make(int d, double beta, std::size_t n, bool allow_beta_beyond_bound = false);

  /// Same validation as make() but leaves grad_bound_c() at zero.
  static KernelSpec make_uncalibrated(int d, double beta, std::size_t n, bool allow_beta_beyond_bound = false);

  int dimension() const noexcept { return d_; }
  double beta() const noexcept { return beta_; }
  std::size_t n() const noexcept { return n_; }
  /// False when beta exceeds d/(d+2); such runs carry no convergence guarantee.
  bool within_beta_bound() const noexcept { return within_bound_; }

  /// n^{beta/d}: the factor by which the support is compressed.
  double scale() const noexcept { return scale_; }
  /// n^beta: the height amplification.
  double amplitude() const noexcept { return amplitude_; }
  /// Half-width of the support cube, n^{-beta/d}/2.
  double support_halfwidth() const noexcept { return 0.5 / scale_; }
  /// ||w^1||_inf.
  double base_sup() const noexcept { return base_sup_; }
  double grad_bound_c() const noexcept { return grad_bound_c_; }
  /// n^{beta(2/d+1)}.
  double grad_bound_factor() const noexcept { return grad_factor_; }

  /// x is a minimal-image displacement (components in [-1/2, 1/2)).
  double eval(std::span<const double> x) const noexcept;
  Vec grad(std::span<const double> x) const noexcept;

  std::string describe() const;

 private:
  KernelSpec() = default;

  int d_ = 1;
  double beta_ = 0.0;
  std::size_t n_ = 1;
  bool within_bound_ = true;
  double scale_ = 1.0;
  double amplitude_ = 1.0;
  double base_sup_ = 0.0;
  double grad_bound_c_ = 0.0;
  double grad_factor_ = 1.0;
};

/// Number of midpoint-rule nodes per axis used for quadrature over the
/// kernel support (odd, so the centre is a node).
std::size_t support_quadrature_points(int d) noexcept;

/// ||w^n||_p by midpoint quadrature over the support; p = +inf gives the
/// maximum over the quadrature nodes. Throws std::invalid_argument for p < 1.
double kernel_norm(const KernelSpec& spec, double p);

/// ||grad w^n||_2² by midpoint quadrature.
double kernel_grad_norm_sq(const KernelSpec& spec);
/// int |grad w^n| by midpoint quadrature.
double kernel_grad_norm_l1(const KernelSpec& spec);

/// Smallest c with |grad w^n|² <= c n^{beta(2/d+1)} w^n, estimated on the
/// quadrature grid and refined around the maximiser.
double estimate_grad_constant(const KernelSpec& spec);

struct KernelValidation {
  double symmetry_residual = 0.0;
  double normalization_residual = 0.0;
  bool support_ok = false;
  double grad_bound_c = 0.0;
  /// Largest |grad w^n|² - (c + 1e-9) n^{beta(2/d+1)} w^n over the grid; <= 0 when the bound holds.
  double grad_bound_excess = 0.0;
  bool passed = false;
};

KernelValidation validate_kernel(const KernelSpec& spec);

}  // namespace modint

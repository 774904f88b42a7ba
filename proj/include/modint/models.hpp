#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "modint/report.hpp"
#include "modint/torus.hpp"

namespace modint {

/// amplitude * (sin|cos)(2 pi k.x) along unit vector e_component.
struct FourierTerm {
  std::array<int, kMaxDim> k{};
  int component = 0;
  double amplitude = 0.0;
  bool sine = true;
};

/// Smooth, time-independent vector field on the torus given by a truncated
/// Fourier series.
class VelocityField {
 public:
  VelocityField() = default;
  VelocityField(int d, std::vector<FourierTerm> terms);

  /// b_j(x) = amplitude * sin(2 pi x_j) for every axis j.
  static VelocityField sine(int d, double amplitude);
  /// b = -grad V with the even potential V(x) = -strength * sum_j cos(2 pi x_j);
  /// points towards the origin.
  static VelocityField attraction(int d, double strength);
  static VelocityField zero(int d) { return VelocityField(d, {}); }

  int dimension() const noexcept { return d_; }
  const std::vector<FourierTerm>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept;
  Vec eval(std::span<const double> x) const noexcept;
  /// int b over the torus (only k = 0 cosine terms contribute).
  Vec mean() const noexcept;

 private:
  int d_ = 1;
  std::vector<FourierTerm> terms_;
};

/// Sup over the torus of |b(x)|, by grid search refined around the maximiser.
double velocity_sup(const VelocityField& b);

/// Built-in Lipschitz nonlinearities g: [0, inf) -> R.
class GFunction {
 public:
  enum class Kind { kZero, kTruncated, kSaturating };

  static GFunction zero() { return GFunction(Kind::kZero, 0.0); }
  /// g(z) = min(z, K); throws std::invalid_argument for K <= 0.
  static GFunction truncated(double K);
  /// g(z) = z / (1 + z).
  static GFunction saturating() { return GFunction(Kind::kSaturating, 0.0); }

  Kind kind() const noexcept { return kind_; }
  double cap() const noexcept { return K_; }
  double operator()(double z) const noexcept {
    switch (kind_) {
      case Kind::kZero: return 0.0;
      case Kind::kTruncated: return z < K_ ? z : K_;
      case Kind::kSaturating: return z / (1.0 + z);
    }
    return 0.0;
  }
  double lipschitz() const noexcept;
  /// Smallest c with g(z) <= c (1 + z) on [0, inf).
  double growth() const noexcept;
  std::string name() const;

 private:
  GFunction(Kind k, double K) : kind_(k), K_(K) {}
  Kind kind_ = Kind::kZero;
  double K_ = 0.0;
};

struct VelocitySpec {
  int dimension = 1;
  /// "sine", "attraction", "fourier" or "zero".
  std::string b_family = "sine";
  double b_amplitude = 0.0;
  std::vector<FourierTerm> b_terms;
  /// "truncated", "saturating" or "zero".
  std::string g_family = "truncated";
  double g_cap = 1.0;
};

/// Ingredients of the non-local drift b * [g(mu * w^n)], with verified constants.
struct AdhesionVelocityModel {
  VelocityField b;
  GFunction g = GFunction::zero();
  double b_sup = 0.0;
  double lip_g = 0.0;
  double growth_c = 0.0;

  bool is_zero() const noexcept { return b.is_zero() || g.kind() == GFunction::Kind::kZero; }
  /// 2 c ||b||_inf, the uniform bound on the drift.
  double drift_bound() const noexcept { return 2.0 * growth_c * b_sup; }
};

AdhesionVelocityModel build_velocity_model(const VelocitySpec& spec);
Report validate_velocity_model(const AdhesionVelocityModel& vm);

struct EnergySpec {
  /// "derouler" (u'' = c (1 - z)^+) or "zero" (u = 0, pure heat).
  std::string family = "zero";
  double c = 0.0;
};

/// Energy u and the derived internal energy F(z) = u(z) + z log z and
/// pressure P(z) = z u'(z) - u(z) + z, with lambda = sup |z u''(z)|.
///
/// The derouler family uses u(0) = u'(0) = 0: for z <= 1,
/// u = c (z²/2 - z³/6), u' = c (z - z²/2); for z >= 1, u = c/3 + (c/2)(z - 1),
/// u' = c/2. Then lambda = |c|/4.
class EnergyModel {
 public:
  enum class Family { kZero, kDerouler };

  Family family() const noexcept { return family_; }
  double coefficient() const noexcept { return c_; }
  double lambda() const noexcept { return lambda_; }
  bool is_zero() const noexcept { return family_ == Family::kZero || c_ == 0.0; }
  std::string name() const;

  double u(double z) const noexcept;
  double du(double z) const noexcept;
  double d2u(double z) const noexcept;
  /// F(z) = u(z) + z log z, with F(0) = 0.
  double F(double z) const noexcept;
  /// F'(z) = u'(z) + log z + 1, log floored at `floor`.
  double dF(double z, double floor = 1e-12) const noexcept;
  double P(double z) const noexcept;
  double dP(double z) const noexcept { return z * d2u(z) + 1.0; }

 private:
  friend EnergyModel build_energy_model(const EnergySpec& spec);
  Family family_ = Family::kZero;
  double c_ = 0.0;
  double lambda_ = 0.0;
};

/// Throws std::invalid_argument for unknown families or |c|/4 >= 1.
EnergyModel build_energy_model(const EnergySpec& spec);

/// Default exponent for the small-z lower bound probe: d/(d+2) + 0.01.
double default_alpha(int d) noexcept;

/// Grid checks of the existence/uniqueness hypotheses on F plus the lambda
/// condition and the consistency of the stored closed forms.
Report validate_energy_model(const EnergyModel& m, int d, double alpha);
inline Report validate_energy_model(const EnergyModel& m, int d) { return validate_energy_model(m, d, default_alpha(d)); }

}  // namespace modint

#pragma once

#include <cstddef>
#include <vector>

#include "modint/field.hpp"
#include "modint/kernel.hpp"
#include "modint/models.hpp"
#include "modint/report.hpp"

namespace modint {

struct DiagnosticSample {
  double time = 0.0;
  /// int rho log rho
  double entropy = 0.0;
  /// 4 int |grad sqrt(rho)|²
  double fisher = 0.0;
  /// int rho²
  double l2sq = 0.0;
  /// E^n(mu) = int F(mu * w^n)
  double energy_n = 0.0;
  /// |grad E^n|²(mu) = int |grad w^n * F'(mu * w^n)|² d mu
  double grad_energy_sq = 0.0;
};

/// int rho log rho with 0 log 0 = 0 (log floored at 1e-300).
double entropy(const DensityField& rho);
/// 4 int |grad sqrt(rho)|², square root taken nodewise, gradient by
/// periodic differences between neighbouring nodes.
double fisher_information(const DensityField& rho);
/// int |grad rho|² / rho with the same differences and the face average of
/// rho in the denominator; the cross-check estimator for fisher_information.
double fisher_information_ratio_form(const DensityField& rho, double floor = 1e-12);
double l2_norm_sq(const DensityField& rho);
/// int |grad rho|².
double gradient_l2_sq(const DensityField& rho);
/// int F(rho).
double internal_energy(const DensityField& rho, const EnergyModel& em);

/// Which derivative enters grad w^n * (.) in the energy-gradient norm.
enum class EnergyGradientPart {
  /// F' = u' + log + 1, the full internal energy.
  kFull,
  /// u' only, the adhesion part bounded by lambda² I(mu * w^n).
  kAdhesion,
};

double mollified_energy(const ParticleConfig& particles, const KernelSpec& kernel, const EnergyModel& em,
                        std::size_t M);
double grad_energy_norm(const ParticleConfig& particles, const KernelSpec& kernel, const EnergyModel& em,
                        std::size_t M, EnergyGradientPart part = EnergyGradientPart::kFull);

class CircularConvolution;

/// Same as grad_energy_norm, reusing an already mollified field and a
/// convolution whose kernels 0..d-1 are the sampled components of grad w^n.
double grad_energy_norm_from_field(const DensityField& mollified, const ParticleConfig& particles,
                                   const EnergyModel& em, CircularConvolution& grad_kernel_conv,
                                   EnergyGradientPart part = EnergyGradientPart::kFull);

}  // namespace modint

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "modint/kernel.hpp"
#include "modint/models.hpp"
#include "modint/report.hpp"
#include "modint/sde.hpp"

namespace modint {

struct EnsembleStat {
  double mean = 0.0;
  /// standard error of the mean
  double se = 0.0;
  std::size_t count = 0;
};

EnsembleStat ensemble_stat(std::span<const double> samples);

/// Expectation-level entropy dissipation over an ensemble of runs with the
/// same configuration:
///   E[Ent_t] - E[Ent_0] + (1 - lambda²)/2 E[int_0^t I] <= t c n^{beta(2/d+1)-1}
/// with a 3-SE allowance, plus the boundedness ratio
///   (sup_t E[E^n_t] + E[int (E^n + I)]) / (E[E^n_0] + 1).
/// Runs need diagnostics and Fisher integrals at identical record times.
Report check_energy_dissipation(std::span<const RunRecord> runs, const EnergyModel& em, const KernelSpec& kernel);

/// sup_t E[int mu~_t²] + (sqrt2/2) E[int_0^t int |grad mu~|²]
///   <= 2 (E[int mu~_0²] + T 2 ||grad w^n||_2² / n) e^{2 c T / sqrt2}
/// with c the drift bound and a 3-SE allowance.
Report check_l2_energy_inequality(std::span<const RunRecord> runs, const KernelSpec& kernel, double drift_bound);

}  // namespace modint

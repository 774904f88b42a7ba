#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "modint/convolution.hpp"
#include "modint/diagnostics.hpp"
#include "modint/field.hpp"
#include "modint/kernel.hpp"
#include "modint/models.hpp"

namespace modint {

/// dX = b * [g(mu * w^n)](X) dt + sqrt(2) dB
struct NonlocalSystem {
  AdhesionVelocityModel model;
};

/// dX = -grad w^n * [u'(mu * w^n)](X) dt + sqrt(2) dB
struct LocalSystem {
  EnergyModel model;
};

using ParticleSystem = std::variant<NonlocalSystem, LocalSystem>;

std::string system_name(const ParticleSystem& sys);

/// Order of the two convolutions in the local drift. They agree in the
/// continuum; on the grid they differ by discretisation error.
enum class LocalDriftOrdering {
  /// (-grad w^n) * u'(mu~)
  kGradientKernel,
  /// w^n * (-grad u'(mu~)), gradient by centred differences
  kGradientField,
};

/// Grid pipeline for the drift: mollify, apply the nonlinearity nodewise,
/// convolve, interpolate at the particles. Owns its FFT plans; one instance
/// per simulation.
class DriftEvaluator {
 public:
  DriftEvaluator(ParticleSystem system, const KernelSpec& kernel, std::size_t M,
                 LocalDriftOrdering ordering = LocalDriftOrdering::kGradientKernel);

  /// True when the drift vanishes identically (g = 0, b = 0 or u = 0).
  bool is_zero() const noexcept { return zero_; }
  std::size_t grid_points() const noexcept { return M_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  const ParticleSystem& system() const noexcept { return system_; }

  /// Drift at every particle (n*d, particle-major). Also refreshes mollified().
  void evaluate(const ParticleConfig& particles, std::vector<double>& drift);
  /// Drift from a given mollified field (no re-mollification).
  void evaluate_field(const DensityField& mollified, const ParticleConfig& particles, std::vector<double>& drift);
  /// Drift field on the grid, one DensityField-shaped array per component.
  std::vector<std::vector<double>> drift_field(const DensityField& mollified);

  const DensityField& mollified() const noexcept { return mollified_; }
  /// Convolution whose kernels 0..d-1 are the components of grad w^n.
  CircularConvolution& gradient_kernel_convolution() noexcept { return grad_conv_; }

  /// Uniform bound on |drift|: 2c||b||_inf (non-local) or
  /// ||grad w^n||_1 sup|u'| (local).
  double drift_bound() const noexcept { return drift_bound_; }

 private:
  ParticleSystem system_;
  KernelSpec kernel_;
  std::size_t M_;
  int d_;
  LocalDriftOrdering ordering_;
  bool zero_ = false;
  double drift_bound_ = 0.0;
  DensityField mollified_;
  CircularConvolution grad_conv_;  // components of grad w^n
  CircularConvolution aux_conv_;   // components of b, or w^n itself
  std::vector<double> work_;
  std::vector<std::vector<double>> comps_;
};

std::vector<double> drift_nonlocal(const ParticleConfig& particles, const KernelSpec& kernel,
                                   const AdhesionVelocityModel& vm, std::size_t M);
std::vector<double> drift_local(const ParticleConfig& particles, const KernelSpec& kernel, const EnergyModel& em,
                                std::size_t M, LocalDriftOrdering ordering = LocalDriftOrdering::kGradientKernel);

struct SimState {
  double t = 0.0;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  ParticleConfig particles;

  bool operator==(const SimState&) const = default;
};

/// X <- wrap(X + drift dt + sqrt(2 dt) xi), xi from the (seed, particle, step)
/// stream. dt = 0 only advances the step index. Throws for dt < 0.
void em_step_inplace(SimState& state, std::span<const double> drift, double dt);
SimState em_step(SimState state, std::span<const double> drift, double dt);

/// cos(2 pi k.x); k = 0 is the constant 1.
struct TestFunction {
  std::array<int, kMaxDim> k{};
  std::string name() const;
  double value(std::span<const double> x) const noexcept;
  Vec gradient(std::span<const double> x) const noexcept;
  double laplacian(std::span<const double> x) const noexcept;
};

struct SimOptions {
  double T = 0.0;
  double dt = 0.0;
  std::size_t M = 0;
  std::vector<double> record_times;
  std::uint64_t seed = 0;
  /// Mollified snapshots at record times.
  bool keep_snapshots = true;
  /// DiagnosticSample at record times.
  bool record_diagnostics = true;
  /// Running time integrals of the Fisher information and int |grad mu~|²;
  /// needs a mollification every step.
  bool track_integrals = true;
  /// Energy used for energy_n/grad_energy_sq in diagnostics; defaults to the
  /// local model's, or the pure entropy for the non-local system.
  std::optional<EnergyModel> diagnostic_energy;
  std::vector<TestFunction> observables;
  /// When set, the final state is written here as a checkpoint.
  std::filesystem::path checkpoint_path;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<double> times;
  std::vector<DiagnosticSample> diagnostics;
  std::vector<DensityField> snapshots;
  /// int_0^t I(mu~_s) ds and int_0^t int |grad mu~_s|² ds at each record time.
  std::vector<double> fisher_integral;
  std::vector<double> grad_l2_integral;
  /// [observable][record] values of <phi, mu_t> and its martingale part.
  std::vector<std::vector<double>> observable_values;
  std::vector<std::vector<double>> observable_martingale;
  double max_drift = 0.0;
  std::uint64_t steps = 0;
  SimState final_state;
};

/// Raised when a step produces non-finite positions or drift.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double t, std::uint64_t step);
  double time() const noexcept { return t_; }
  std::uint64_t step() const noexcept { return step_; }

 private:
  double t_;
  std::uint64_t step_;
};

/// Heuristic explicit step: min(h²/4, 0.1 * kernel half-width / drift bound).
double default_time_step(const KernelSpec& kernel, std::size_t M, double drift_bound);

RunRecord simulate(const ParticleConfig& init, const ParticleSystem& system, const KernelSpec& kernel,
                   const SimOptions& opts);
/// Continues from a checkpointed state; opts.T is the absolute end time and
/// record times before state.t are rejected. opts.seed is ignored.
RunRecord simulate_from(const SimState& state, const ParticleSystem& system, const KernelSpec& kernel,
                        const SimOptions& opts);

// Checkpoint layout: 8-byte magic "MODINTCK", int64 n, int32 d, double t,
// uint64 step, uint64 seed, then n*d doubles.
void write_checkpoint(const SimState& state, const std::filesystem::path& path);
SimState read_checkpoint(const std::filesystem::path& path);

}  // namespace modint

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "modint/field.hpp"
#include "modint/models.hpp"
#include "modint/report.hpp"

namespace modint {

enum class LocalForm {
  /// d rho = Laplacian P(rho)
  kDiffusion,
  /// d rho = div(rho grad F'(rho))
  kTransport,
};

/// Face value of rho in the transport form.
enum class FaceAveraging { kUpwind, kArithmetic };

std::string to_string(LocalForm f);
LocalForm parse_local_form(const std::string& s);

struct PdeOptions {
  double T = 0.0;
  /// 0 picks half the stability bound.
  double dt = 0.0;
  std::vector<double> record_times;
  bool keep_snapshots = true;
  FaceAveraging face = FaceAveraging::kUpwind;
};

struct PdeRun {
  std::string scheme;
  int dimension = 1;
  std::size_t M = 0;
  double T = 0.0;
  double dt = 0.0;
  double dt_advection_bound = 0.0;
  double dt_diffusion_bound = 0.0;
  std::uint64_t steps = 0;
  std::vector<double> times;
  std::vector<DensityField> snapshots;
  std::vector<double> mass;
  double max_mass_drift = 0.0;
  /// int_0^t ||rho_s||_2² ds at each record time.
  std::vector<double> l2_time_integral;
  /// Smallest value seen before clamping.
  double min_value = 0.0;
  DensityField final_field;

  double dt_bound() const;
  nlohmann::json manifest() const;
};

/// Mass drift > 1e-4, a value below -1e-6, or a clamp that would move more
/// than 1e-10 of mass.
class PdeInstability : public std::runtime_error {
 public:
  PdeInstability(const std::string& what, double t, std::uint64_t step);
  double time() const noexcept { return t_; }
  std::uint64_t step() const noexcept { return step_; }

 private:
  double t_;
  std::uint64_t step_;
};

/// Advection h/(2 v_max) and diffusion h²/(2 d D_max) bounds.
double advection_time_bound(std::size_t M, double velocity_sup);
double diffusion_time_bound(std::size_t M, int d, double diffusion_sup);

/// d rho + div(rho b * g(rho)) = Laplacian rho, upwind advection, centred
/// diffusion, explicit Euler.
PdeRun solve_nonlocal(const DensityField& rho0, const AdhesionVelocityModel& vm, const PdeOptions& opts);
PdeRun solve_local(const DensityField& rho0, const EnergyModel& em, LocalForm form, const PdeOptions& opts);

struct GronwallGap {
  std::vector<double> times;
  /// ||rho_t - rho~_t||² / ||rho_0 - rho~_0||²
  std::vector<double> ratios;
  double sup_ratio = 0.0;
  /// exp{(T c² + Lip(g)² ||rho~||²_{L²L²}) ||b||²_inf}
  double bound = 1.0;
  /// log(bound) / max(log(sup_ratio), 0); infinite when the gap never grows.
  double margin = 0.0;
  Report report;
};

GronwallGap gronwall_gap(const AdhesionVelocityModel& vm, const DensityField& rho0_a, const DensityField& rho0_b,
                         const PdeOptions& opts);

/// snapshot_<k>.csv (or .bin) per record time plus manifest.json.
void write_pde_run(const PdeRun& run, const std::filesystem::path& dir, bool binary = false);

}  // namespace modint

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "modint/field.hpp"
#include "modint/kernel.hpp"
#include "modint/models.hpp"
#include "modint/pde.hpp"
#include "modint/sde.hpp"

namespace modint {

struct InitialSpec {
  /// "uniform" or "cosine": 1 + amplitude cos(2 pi mode x_1).
  std::string family = "uniform";
  double amplitude = 0.5;
  int mode = 1;
};

struct StudyConfig {
  /// "nonlocal" or "local".
  std::string system = "nonlocal";
  int dimension = 1;
  double beta = 1.0 / 3.0;
  bool override_beta_bound = false;
  VelocitySpec velocity;
  EnergySpec energy;
  /// F-existence probe exponent; 0 picks d/(d+2) + 0.01.
  double alpha = 0.0;
  std::vector<std::size_t> n_list{1000, 10000, 100000};
  std::vector<std::uint64_t> seeds;
  double T = 0.1;
  /// 0 picks the default explicit step per n.
  double dt = 1e-3;
  /// 0 picks the default grid; always raised to resolve the kernel.
  std::size_t M = 0;
  std::vector<double> record_times;
  InitialSpec initial;
  std::size_t pde_M = 512;
  double pde_dt = 0.0;
  /// Form of the local reference PDE.
  std::string local_form = "diffusion";
  /// Test functions cos(2 pi k.x) for the fluctuation study.
  std::vector<std::array<int, kMaxDim>> observables{{1, 0, 0}};
  std::string out_dir = "out";
  int threads = 1;
};

StudyConfig parse_config(const nlohmann::json& j);
StudyConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const StudyConfig& cfg);
/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits. Excludes
/// threads and out_dir, which do not affect results.
std::string config_hash(const StudyConfig& cfg);

DensityField initial_density(const InitialSpec& spec, int d, std::size_t M);
KernelSpec kernel_for(const StudyConfig& cfg, std::size_t n);
/// max(M or the default, smallest grid that resolves the kernel)
std::size_t grid_points_for(const StudyConfig& cfg, const KernelSpec& kernel);
ParticleSystem system_for(const StudyConfig& cfg);
bool is_local(const StudyConfig& cfg);
std::vector<TestFunction> observables_for(const StudyConfig& cfg);
/// Record times, or {0, T} when none are configured.
std::vector<double> record_times_for(const StudyConfig& cfg);

/// Reference PDE solution on a pde_M grid started from the initial density.
PdeRun solve_reference(const StudyConfig& cfg);

}  // namespace modint

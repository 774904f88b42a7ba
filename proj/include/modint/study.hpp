#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modint/config.hpp"
#include "modint/inequalities.hpp"
#include "modint/measures.hpp"
#include "modint/report.hpp"

namespace modint {

/// Runs fn(0..count-1) on `threads` workers. Each index runs exactly once;
/// callers store results by index so the outcome is independent of
/// scheduling. The first exception is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Kernel reports for every n, plus the velocity or energy model report.
std::vector<Report> validate_config(const StudyConfig& cfg);
bool all_passed(const std::vector<Report>& reports);

struct DistanceRow {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double t = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  /// NaN for d >= 2.
  double w1 = 0.0;
};

struct SummaryRow {
  std::size_t n = 0;
  double t = 0.0;
  EnsembleStat l1, l2, w1;
};

struct ConvergenceStudy {
  std::string config_hash;
  std::vector<DistanceRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<Report> validation;
  Report checks;
  nlohmann::json manifest;
  bool certified = false;
};

struct StudyOutput {
  /// Write study.csv, summary.csv, runs/*.csv, reference/ and manifest.json.
  bool write = true;
  /// Mollified snapshots of the first seed of each n.
  bool snapshots = true;
};

/// For each n and seed: i.i.d. initial particles from the initial density,
/// simulate, and measure L1/L2/W1 distances of the mollified density to the
/// reference PDE solution at every record time.
ConvergenceStudy run_convergence_study(const StudyConfig& cfg, const StudyOutput& out = {});

struct MomentRow {
  std::size_t n = 0;
  EnsembleStat estimate;
  double bound = 0.0;
  double finer_bound = 0.0;
};

struct MomentBoundResult {
  std::vector<MomentRow> rows;
  Report report;
};

/// Monte Carlo E[int (mu^n * w^n)²] for i.i.d. samples of rho_bar against
/// ||w^1||_inf + int rho_bar² and the sharper
/// ((n-1)/n) int (rho_bar * w^n)² + ||w^1||_inf n^{beta-1}.
MomentBoundResult moment_bound_check(const DensityField& rho_bar, const std::vector<std::size_t>& n_list, double beta,
                                     const std::vector<std::uint64_t>& seeds, bool override_beta_bound = false,
                                     int threads = 1);

struct FluctuationRow {
  std::size_t n = 0;
  std::string test_function;
  double t = 0.0;
  double value_variance = 0.0;
  double martingale_variance = 0.0;
  double predicted_qv = 0.0;
};

struct FluctuationStudy {
  std::vector<FluctuationRow> rows;
  /// Least-squares slope of log variance against log n, per test function.
  std::vector<double> slopes;
  Report report;
};

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Ensemble variance of <phi, mu_T> across seeds, per n and test function.
/// The quadratic-variation level check applies when the drift vanishes and
/// the initial law is uniform.
FluctuationStudy fluctuation_scaling_study(const StudyConfig& cfg, bool write = false);

/// Single-run driver used by the CLI `simulate` subcommand.
struct SingleRun {
  RunRecord record;
  std::vector<DistanceRow> distances;
};
SingleRun run_single(const StudyConfig& cfg, std::size_t n, std::uint64_t seed, bool with_reference);

void write_diagnostics_csv(const RunRecord& rec, const std::filesystem::path& path);
void write_study_csv(const std::vector<DistanceRow>& rows, const std::filesystem::path& path);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

/// Kernel, model and run metadata shared by all manifests.
nlohmann::json model_manifest(const StudyConfig& cfg);

}  // namespace modint

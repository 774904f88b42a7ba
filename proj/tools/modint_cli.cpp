#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "modint/config.hpp"
#include "modint/study.hpp"

using namespace modint;

namespace {

struct Common {
  std::string config;
  long long seed = -1;
  int threads = 0;
  std::string out_dir;
  bool override_beta = false;
};

StudyConfig load(const Common& c) {
  StudyConfig cfg = c.config.empty() ? StudyConfig{} : load_config(c.config);
  if (cfg.seeds.empty()) cfg.seeds = {1};
  if (c.seed >= 0) {
    const auto count = cfg.seeds.size();
    cfg.seeds.clear();
    for (std::size_t i = 0; i < count; ++i) cfg.seeds.push_back(std::uint64_t(c.seed) + i);
  }
  if (c.threads > 0) cfg.threads = c.threads;
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  if (c.override_beta) {
    cfg.override_beta_bound = true;
    std::cerr << "warning: beta bound overridden; runs are not covered by the convergence theory\n";
  }
  return cfg;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

int print(const std::vector<Report>& reports) {
  for (const auto& r : reports) std::cout << r.to_text();
  return all_passed(reports) ? 0 : 1;
}

int cmd_validate(const Common& c) {
  const auto cfg = load(c);
  const auto reports = validate_config(cfg);
  nlohmann::json j = model_manifest(cfg);
  j["validation"] = nlohmann::json::array();
  for (const auto& r : reports) j["validation"].push_back(r.to_json());
  write_json(std::filesystem::path(cfg.out_dir) / "validation.json", j);
  return print(reports);
}

int cmd_simulate(const Common& c, std::size_t n, bool reference, const std::string& checkpoint) {
  auto cfg = load(c);
  if (n == 0) n = cfg.n_list.at(0);
  const auto reports = validate_config(cfg);
  const std::uint64_t seed = cfg.seeds.front();
  auto run = run_single(cfg, n, seed, reference);
  const std::filesystem::path dir = cfg.out_dir;
  const std::string stem = "n" + std::to_string(n) + "_seed" + std::to_string(seed);
  write_diagnostics_csv(run.record, dir / (stem + ".csv"));
  for (std::size_t k = 0; k < run.record.snapshots.size(); ++k) {
    std::ofstream out(dir / (stem + "_snap" + std::to_string(k) + ".csv"));
    write_field_csv(run.record.snapshots[k], out);
  }
  if (reference) write_study_csv(run.distances, dir / (stem + "_distances.csv"));
  if (!checkpoint.empty()) write_checkpoint(run.record.final_state, checkpoint);
  nlohmann::json m = model_manifest(cfg);
  m["run"] = {{"n", n}, {"seed", seed}, {"steps", run.record.steps}, {"max_drift", run.record.max_drift}};
  write_json(dir / (stem + "_manifest.json"), m);
  std::printf("n=%zu seed=%llu steps=%llu max|drift|=%.6g\n", n, static_cast<unsigned long long>(seed),
              static_cast<unsigned long long>(run.record.steps), run.record.max_drift);
  for (const auto& d : run.distances) std::printf("t=%.6g L1=%.6g L2=%.6g W1=%.6g\n", d.t, d.l1, d.l2, d.w1);
  return print(reports);
}

int cmd_solve_pde(const Common& c, bool binary) {
  const auto cfg = load(c);
  const PdeRun run = solve_reference(cfg);
  write_pde_run(run, std::filesystem::path(cfg.out_dir) / "pde", binary);
  Report r;
  r.title = "pde " + run.scheme;
  r.add("mass_conservation", run.max_mass_drift <= 1e-8 * std::max(cfg.T, 1.0), run.max_mass_drift,
        1e-8 * std::max(cfg.T, 1.0));
  r.add("positivity", run.min_value >= -1e-12, run.min_value, -1e-12);
  std::printf("steps=%llu dt=%.6g bound=%.6g\n", static_cast<unsigned long long>(run.steps), run.dt, run.dt_bound());
  return print({r});
}

int cmd_converge(const Common& c) {
  const auto cfg = load(c);
  const auto st = run_convergence_study(cfg);
  for (const auto& s : st.summary)
    std::printf("n=%zu t=%.4g L2=%.6g (se %.2g) L1=%.6g W1=%.6g\n", s.n, s.t, s.l2.mean, s.l2.se, s.l1.mean,
                s.w1.mean);
  auto reports = st.validation;
  reports.push_back(st.checks);
  return print(reports);
}

int cmd_moment(const Common& c) {
  const auto cfg = load(c);
  const DensityField rho = initial_density(cfg.initial, cfg.dimension, cfg.dimension == 1 ? 4096 : cfg.pde_M);
  const auto res = moment_bound_check(rho, cfg.n_list, cfg.beta, cfg.seeds, cfg.override_beta_bound, cfg.threads);
  nlohmann::json j = model_manifest(cfg);
  j["study"] = "moment_bound";
  j["checks"] = res.report.to_json();
  write_json(std::filesystem::path(cfg.out_dir) / "moment_bound.json", j);
  return print({res.report});
}

int cmd_fluct(const Common& c) {
  const auto cfg = load(c);
  const auto st = fluctuation_scaling_study(cfg, true);
  return print({st.report});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moderately interacting particle systems on the torus"};
  app.require_subcommand(1);
  Common c;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", c.config, "JSON study configuration")->check(CLI::ExistingFile);
    s->add_option("--seed", c.seed, "base seed (replaces the configured seeds)");
    s->add_option("--threads", c.threads, "worker threads");
    s->add_option("--out-dir", c.out_dir, "output directory");
    s->add_flag("--override-beta-bound", c.override_beta, "allow beta above d/(d+2)");
  };

  auto* validate = app.add_subcommand("validate", "kernel and model validation reports");
  common(validate);
  std::size_t n = 0;
  bool reference = false;
  std::string checkpoint;
  auto* simulate = app.add_subcommand("simulate", "one particle run");
  common(simulate);
  simulate->add_option("--n", n, "particle count (default: first configured n)");
  simulate->add_flag("--reference", reference, "measure distances to the PDE reference");
  simulate->add_option("--checkpoint", checkpoint, "write the final state here");
  bool binary = false;
  auto* pde = app.add_subcommand("solve-pde", "reference PDE solution");
  common(pde);
  pde->add_flag("--binary", binary, "binary snapshots");
  auto* converge = app.add_subcommand("converge", "particle to PDE convergence study");
  common(converge);
  auto* moment = app.add_subcommand("moment-bound", "i.i.d. moment bound check");
  common(moment);
  auto* fluct = app.add_subcommand("fluctuations", "fluctuation scaling study");
  common(fluct);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*validate) return cmd_validate(c);
    if (*simulate) return cmd_simulate(c, n, reference, checkpoint);
    if (*pde) return cmd_solve_pde(c, binary);
    if (*converge) return cmd_converge(c);
    if (*moment) return cmd_moment(c);
    if (*fluct) return cmd_fluct(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

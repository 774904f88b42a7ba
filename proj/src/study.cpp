#include "modint/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "modint/diagnostics.hpp"

namespace modint {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

Report kernel_report(const KernelSpec& spec, double reference_c) {
  const auto v = validate_kernel(spec);
  Report r;
  r.title = "kernel " + spec.describe();
  r.add("symmetry", v.symmetry_residual <= 1e-14, v.symmetry_residual, 1e-14);
  r.add("normalization", v.normalization_residual <= 1e-8, v.normalization_residual, 1e-8);
  r.add("support", v.support_ok, v.support_ok ? 1.0 : 0.0, 1.0);
  r.add("gradient_bound", v.grad_bound_excess <= 0.0, v.grad_bound_excess, 0.0, "c=" + fmt(spec.grad_bound_c()));
  const double drift = std::abs(v.grad_bound_c - reference_c) / reference_c;
  r.add("gradient_constant_n_independent", drift < 0.01, drift, 0.01, "estimated c=" + fmt(v.grad_bound_c));
  r.add("beta_within_bound", spec.within_beta_bound(), spec.beta(), beta_upper_bound(spec.dimension()),
        spec.within_beta_bound() ? "" : "beta bound overridden; convergence not covered by the theory", true);
  return r;
}

// PDE snapshot interpolated on the particle grid and scaled to the same mass.
DensityField reference_on(const DensityField& pde, const DensityField& like) {
  DensityField ref = DensityField::from_function(like.dimension(), like.points_per_axis(),
                                                 [&](std::span<const double> x) { return eval_field_at(pde, x); });
  const double scale = like.total_mass() / ref.total_mass();
  std::vector<double> v(ref.values().begin(), ref.values().end());
  for (double& x : v) x *= scale;
  return DensityField(like.dimension(), like.points_per_axis(), std::move(v));
}

std::vector<DistanceRow> distances(const RunRecord& rec, const PdeRun& ref, std::size_t n) {
  std::vector<DistanceRow> rows;
  for (std::size_t k = 0; k < rec.snapshots.size(); ++k) {
    const auto& mol = rec.snapshots[k];
    const DensityField r = reference_on(ref.snapshots.at(k), mol);
    DistanceRow row;
    row.n = n;
    row.seed = rec.seed;
    row.t = rec.times[k];
    row.l1 = field_distance(mol, r, Metric::kL1);
    row.l2 = field_distance(mol, r, Metric::kL2);
    row.w1 = mol.dimension() == 1 ? field_distance(mol, r, Metric::kW1) : kNaN;
    rows.push_back(row);
  }
  return rows;
}

SimOptions sim_options(const StudyConfig& cfg, const KernelSpec& kernel, const ParticleSystem& sys,
                       std::uint64_t seed) {
  SimOptions o;
  o.T = cfg.T;
  o.M = grid_points_for(cfg, kernel);
  o.seed = seed;
  o.record_times = record_times_for(cfg);
  if (cfg.dt > 0.0) {
    o.dt = cfg.dt;
  } else {
    DriftEvaluator probe(sys, kernel, o.M);
    o.dt = default_time_step(kernel, o.M, probe.drift_bound());
  }
  return o;
}

// Fine grid the initial particles are drawn from.
std::size_t sampling_grid(const StudyConfig& cfg) {
  if (cfg.dimension == 1) return std::max<std::size_t>(cfg.pde_M, 4096);
  return cfg.pde_M;
}

}  // namespace

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::atomic<bool> stop{false};
  auto work = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        stop.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Report> validate_config(const StudyConfig& cfg) {
  std::vector<Report> out;
  const double c_ref = KernelSpec::make(cfg.dimension, cfg.beta, 1, cfg.override_beta_bound).grad_bound_c();
  for (std::size_t n : cfg.n_list) out.push_back(kernel_report(kernel_for(cfg, n), c_ref));
  if (is_local(cfg)) {
    const auto em = build_energy_model(cfg.energy);
    Report r = cfg.alpha > 0.0 ? validate_energy_model(em, cfg.dimension, cfg.alpha)
                               : validate_energy_model(em, cfg.dimension);
    r.title = "energy model " + em.name();
    out.push_back(std::move(r));
  } else {
    VelocitySpec v = cfg.velocity;
    v.dimension = cfg.dimension;
    Report r = validate_velocity_model(build_velocity_model(v));
    r.title = "velocity model";
    out.push_back(std::move(r));
  }
  return out;
}

bool all_passed(const std::vector<Report>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const Report& r) { return r.passed(); });
}

nlohmann::json model_manifest(const StudyConfig& cfg) {
  nlohmann::json j;
  j["config_hash"] = config_hash(cfg);
  j["config"] = to_json(cfg);
  j["config"].erase("threads");
  j["config"].erase("out_dir");
  nlohmann::json kernels = nlohmann::json::array();
  for (std::size_t n : cfg.n_list) {
    const auto k = kernel_for(cfg, n);
    kernels.push_back({{"n", n},
                       {"scale", k.scale()},
                       {"support_halfwidth", k.support_halfwidth()},
                       {"grad_bound_c", k.grad_bound_c()},
                       {"M", grid_points_for(cfg, k)},
                       {"within_beta_bound", k.within_beta_bound()}});
  }
  j["kernels"] = kernels;
  if (is_local(cfg)) {
    const auto em = build_energy_model(cfg.energy);
    j["model"] = {{"system", "local"}, {"energy", em.name()}, {"lambda", em.lambda()}};
  } else {
    VelocitySpec v = cfg.velocity;
    v.dimension = cfg.dimension;
    const auto vm = build_velocity_model(v);
    j["model"] = {{"system", "nonlocal"},
                  {"g", vm.g.name()},
                  {"lip_g", vm.lip_g},
                  {"growth_c", vm.growth_c},
                  {"b_sup", vm.b_sup},
                  {"drift_bound", vm.drift_bound()}};
  }
  return j;
}

void write_diagnostics_csv(const RunRecord& rec, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "time,entropy,fisher,l2sq,energy_n,grad_energy_sq\n";
  for (const auto& s : rec.diagnostics)
    out << fmt(s.time) << ',' << fmt(s.entropy) << ',' << fmt(s.fisher) << ',' << fmt(s.l2sq) << ','
        << fmt(s.energy_n) << ',' << fmt(s.grad_energy_sq) << '\n';
}

void write_study_csv(const std::vector<DistanceRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "n,seed,t,L1,L2,W1\n";
  for (const auto& r : rows)
    out << r.n << ',' << r.seed << ',' << fmt(r.t) << ',' << fmt(r.l1) << ',' << fmt(r.l2) << ',' << fmt(r.w1)
        << '\n';
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "n,t,seeds,mean_L1,se_L1,mean_L2,se_L2,mean_W1,se_W1\n";
  for (const auto& r : rows)
    out << r.n << ',' << fmt(r.t) << ',' << r.l2.count << ',' << fmt(r.l1.mean) << ',' << fmt(r.l1.se) << ','
        << fmt(r.l2.mean) << ',' << fmt(r.l2.se) << ',' << fmt(r.w1.mean) << ',' << fmt(r.w1.se) << '\n';
}

SingleRun run_single(const StudyConfig& cfg, std::size_t n, std::uint64_t seed, bool with_reference) {
  const KernelSpec kernel = kernel_for(cfg, n);
  const ParticleSystem sys = system_for(cfg);
  const DensityField rho0 = initial_density(cfg.initial, cfg.dimension, sampling_grid(cfg));
  SimOptions o = sim_options(cfg, kernel, sys, seed);
  o.track_integrals = false;
  SingleRun out;
  out.record = simulate(sample_iid(rho0, n, seed), sys, kernel, o);
  if (with_reference) out.distances = distances(out.record, solve_reference(cfg), n);
  return out;
}

ConvergenceStudy run_convergence_study(const StudyConfig& cfg, const StudyOutput& output) {
  ConvergenceStudy st;
  st.config_hash = config_hash(cfg);
  st.validation = validate_config(cfg);
  st.certified = all_passed(st.validation);
  const std::filesystem::path dir = cfg.out_dir;

  const PdeRun ref = solve_reference(cfg);
  const DensityField rho0 = initial_density(cfg.initial, cfg.dimension, sampling_grid(cfg));
  const ParticleSystem sys = system_for(cfg);

  std::vector<std::size_t> ns = cfg.n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());

  struct Task {
    std::size_t n;
    std::uint64_t seed;
    bool first;
  };
  std::vector<Task> tasks;
  for (std::size_t n : ns)
    for (std::size_t s = 0; s < seeds.size(); ++s) tasks.push_back({n, seeds[s], s == 0});

  std::vector<std::vector<DistanceRow>> results(tasks.size());
  std::vector<std::string> failures(tasks.size());
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    try {
      const KernelSpec kernel = kernel_for(cfg, t.n);
      SimOptions o = sim_options(cfg, kernel, sys, t.seed);
      o.track_integrals = false;
      RunRecord rec = simulate(sample_iid(rho0, t.n, t.seed), sys, kernel, o);
      rec.config_hash = st.config_hash;
      results[i] = distances(rec, ref, t.n);
      if (output.write) {
        const std::string stem = "n" + std::to_string(t.n) + "_seed" + std::to_string(t.seed);
        write_diagnostics_csv(rec, dir / "runs" / (stem + ".csv"));
        if (output.snapshots && t.first) {
          for (std::size_t k = 0; k < rec.snapshots.size(); ++k) {
            auto out = open_out(dir / "runs" / (stem + "_snap" + std::to_string(k) + ".csv"));
            write_field_csv(rec.snapshots[k], out);
          }
        }
      }
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!failures[i].empty()) {
      st.checks.title = "convergence";
      st.checks.add("member_runs", false, double(i), 0.0,
                    "n=" + std::to_string(tasks[i].n) + " seed=" + std::to_string(tasks[i].seed) + ": " + failures[i]);
    }
    st.rows.insert(st.rows.end(), results[i].begin(), results[i].end());
  }

  // ensemble means per (n, t)
  std::map<std::pair<std::size_t, double>, std::array<std::vector<double>, 3>> groups;
  for (const auto& r : st.rows) {
    auto& g = groups[{r.n, r.t}];
    g[0].push_back(r.l1);
    g[1].push_back(r.l2);
    g[2].push_back(r.w1);
  }
  for (const auto& [key, g] : groups) {
    SummaryRow s;
    s.n = key.first;
    s.t = key.second;
    s.l1 = ensemble_stat(g[0]);
    s.l2 = ensemble_stat(g[1]);
    s.w1 = ensemble_stat(g[2]);
    st.summary.push_back(s);
  }

  st.checks.title = "convergence";
  std::vector<double> final_l2;
  for (std::size_t n : ns) {
    const auto it = std::find_if(st.summary.rbegin(), st.summary.rend(), [&](const SummaryRow& s) { return s.n == n; });
    final_l2.push_back(it == st.summary.rend() ? kNaN : it->l2.mean);
  }
  bool decreasing = !final_l2.empty();
  for (std::size_t i = 1; i < final_l2.size(); ++i) decreasing = decreasing && final_l2[i] < final_l2[i - 1];
  std::ostringstream os;
  for (std::size_t i = 0; i < ns.size(); ++i) os << (i ? " " : "") << "n=" << ns[i] << ":" << fmt(final_l2[i]);
  st.checks.add("final_l2_decreasing_in_n", decreasing, final_l2.empty() ? kNaN : final_l2.back(),
                final_l2.empty() ? kNaN : final_l2.front(), os.str());
  st.checks.add("certified", st.certified, st.certified ? 1.0 : 0.0, 1.0, "all validators passed");

  st.manifest = model_manifest(cfg);
  st.manifest["study"] = "convergence";
  st.manifest["reference"] = ref.manifest();
  st.manifest["certified"] = st.certified;
  nlohmann::json vals = nlohmann::json::array();
  for (const auto& r : st.validation) vals.push_back(r.to_json());
  st.manifest["validation"] = vals;
  st.manifest["checks"] = st.checks.to_json();
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& t : tasks) {
    const std::string stem = "n" + std::to_string(t.n) + "_seed" + std::to_string(t.seed);
    nlohmann::json r = {{"n", t.n}, {"seed", t.seed}, {"diagnostics", "runs/" + stem + ".csv"}};
    if (output.snapshots && t.first) {
      nlohmann::json snaps = nlohmann::json::array();
      for (std::size_t k = 0; k < ref.times.size(); ++k) snaps.push_back("runs/" + stem + "_snap" + std::to_string(k) + ".csv");
      r["snapshots"] = snaps;
    }
    runs.push_back(r);
  }
  st.manifest["runs"] = runs;
  st.manifest["record_times"] = ref.times;

  if (output.write) {
    write_study_csv(st.rows, dir / "study.csv");
    write_summary_csv(st.summary, dir / "summary.csv");
    write_pde_run(ref, dir / "reference");
    nlohmann::json m = st.manifest;
    m["reference"]["directory"] = "reference";
    auto out = open_out(dir / "manifest.json");
    out << m.dump(2) << '\n';
  }
  return st;
}

MomentBoundResult moment_bound_check(const DensityField& rho_bar, const std::vector<std::size_t>& n_list, double beta,
                                     const std::vector<std::uint64_t>& seeds, bool override_beta_bound, int threads) {
  if (seeds.empty()) throw std::invalid_argument("moment_bound_check: no seeds");
  const int d = rho_bar.dimension();
  const double w1_sup = std::pow(kBumpPrefactor, d);
  const double rho_l2 = l2_norm_sq(rho_bar) / (rho_bar.total_mass() * rho_bar.total_mass());
  const double bound = w1_sup + rho_l2;

  MomentBoundResult res;
  res.report.title = "moment_bound";
  for (std::size_t n : n_list) {
    const KernelSpec kernel = KernelSpec::make(d, beta, n, override_beta_bound);
    const std::size_t M = std::max<std::size_t>(d == 1 ? 256 : 128, min_resolving_points(kernel));
    std::vector<double> est(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t s) {
      est[s] = l2_norm_sq(mollify(sample_iid(rho_bar, n, seeds[s]), kernel, M));
    });
    MomentRow row;
    row.n = n;
    row.estimate = ensemble_stat(est);
    row.bound = bound;

    // rho_bar * w^n on the mollification grid
    const DensityField coarse = DensityField::from_function(
        d, M, [&](std::span<const double> x) { return eval_field_at(rho_bar, x); });
    CircularConvolution conv(d, M);
    const auto k = conv.add_kernel(sample_displacement_kernel(d, M, [&](std::span<const double> x) { return kernel.eval(x); }));
    std::vector<double> smooth(coarse.size());
    conv.apply(coarse.values(), smooth, k);
    const double smooth_l2 = l2_norm_sq(DensityField(d, M, std::move(smooth))) / (coarse.total_mass() * coarse.total_mass());
    row.finer_bound = (double(n) - 1.0) / double(n) * smooth_l2 + w1_sup * std::pow(double(n), kernel.beta() - 1.0);
    res.rows.push_back(row);

    const double allowance = 3.0 * row.estimate.se;
    std::ostringstream os;
    os << "estimate=" << fmt(row.estimate.mean) << " se=" << fmt(row.estimate.se) << " seeds=" << seeds.size();
    res.report.add("bound_n" + std::to_string(n), row.estimate.mean <= bound + allowance, row.estimate.mean,
                   bound + allowance, os.str());
    res.report.add("finer_bound_n" + std::to_string(n), row.estimate.mean <= row.finer_bound + allowance,
                   row.estimate.mean, row.finer_bound + allowance, os.str());
    if (n == 1) {
      const double exact = std::pow(kernel_norm(kernel, 2.0), 2.0);
      double worst = 0.0;
      for (double e : est) worst = std::max(worst, std::abs(e - exact));
      res.report.add("single_particle_exact", worst <= 1e-8, worst, 1e-8, "||w^n||_2²=" + fmt(exact));
    }
  }
  return res;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog_slope: need two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= double(x.size());
  my /= double(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

FluctuationStudy fluctuation_scaling_study(const StudyConfig& cfg, bool write) {
  FluctuationStudy st;
  st.report.title = "fluctuations";
  const ParticleSystem sys = system_for(cfg);
  const DensityField rho0 = initial_density(cfg.initial, cfg.dimension, sampling_grid(cfg));
  const auto observables = observables_for(cfg);
  std::vector<std::size_t> ns = cfg.n_list;
  std::sort(ns.begin(), ns.end());
  const bool driftless_uniform =
      cfg.initial.family == "uniform" &&
      std::visit([](const auto& s) { return s.model.is_zero(); }, sys);

  // records[n index][observable] -> FluctuationRecord
  std::vector<std::vector<FluctuationRecord>> records(ns.size());
  for (std::size_t a = 0; a < ns.size(); ++a) {
    const std::size_t n = ns[a];
    const KernelSpec kernel = kernel_for(cfg, n);
    std::vector<RunRecord> runs(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t s) {
      SimOptions o = sim_options(cfg, kernel, sys, cfg.seeds[s]);
      o.record_times = {cfg.T};
      o.keep_snapshots = false;
      o.record_diagnostics = false;
      o.track_integrals = false;
      o.observables = observables;
      runs[s] = simulate(sample_iid(rho0, n, cfg.seeds[s]), sys, kernel, o);
      runs[s].final_state.particles = ParticleConfig();
    });
    for (std::size_t o = 0; o < observables.size(); ++o) {
      FluctuationRecord fr;
      fr.test_function = observables[o].name();
      fr.times = runs.front().times;
      double k2 = 0.0;
      for (int v : observables[o].k) k2 += double(v * v);
      for (const auto& r : runs) {
        fr.values.push_back(r.observable_values[o]);
        fr.martingale.push_back(r.observable_martingale[o]);
      }
      // (2/n) int_0^t int |grad phi|² dmu with mu uniform
      for (double t : fr.times) fr.predicted_qv.push_back(4.0 * std::numbers::pi * std::numbers::pi * k2 * t / double(n));
      records[a].push_back(std::move(fr));
    }
  }

  for (std::size_t o = 0; o < observables.size(); ++o) {
    std::vector<double> xs, ys;
    bool constant = true;
    for (int v : observables[o].k) constant = constant && v == 0;
    for (std::size_t a = 0; a < ns.size(); ++a) {
      const auto& fr = records[a][o];
      const std::size_t k = fr.times.size() - 1;
      FluctuationRow row{ns[a], fr.test_function, fr.times[k], fr.value_variance(k), fr.martingale_variance(k),
                         fr.predicted_qv[k]};
      st.rows.push_back(row);
      xs.push_back(double(ns[a]));
      ys.push_back(row.value_variance);
      if (constant) {
        st.report.add("zero_variance_" + fr.test_function + "_n" + std::to_string(ns[a]), row.value_variance <= 1e-24,
                      row.value_variance, 1e-24);
      } else if (driftless_uniform && row.predicted_qv > 0.0) {
        const double rel = std::abs(row.martingale_variance / row.predicted_qv - 1.0);
        st.report.add("qv_level_" + fr.test_function + "_n" + std::to_string(ns[a]), rel <= 0.25, rel, 0.25,
                      "martingale variance " + fmt(row.martingale_variance) + " vs 4 pi² t/n " + fmt(row.predicted_qv));
      }
    }
    if (constant || ns.size() < 2) {
      st.slopes.push_back(kNaN);
      continue;
    }
    const double slope = fit_loglog_slope(xs, ys);
    st.slopes.push_back(slope);
    st.report.add("variance_slope_" + observables[o].name(), std::abs(slope + 1.0) <= 0.2, slope, -1.0,
                  "tolerance 0.2, seeds=" + std::to_string(cfg.seeds.size()));
  }

  if (write) {
    const std::filesystem::path dir = cfg.out_dir;
    auto out = open_out(dir / "fluctuations.csv");
    out << "n,test_function,t,value_variance,martingale_variance,predicted_qv\n";
    for (const auto& r : st.rows)
      out << r.n << ',' << r.test_function << ',' << fmt(r.t) << ',' << fmt(r.value_variance) << ','
          << fmt(r.martingale_variance) << ',' << fmt(r.predicted_qv) << '\n';
    nlohmann::json m = model_manifest(cfg);
    m["study"] = "fluctuations";
    m["checks"] = st.report.to_json();
    auto mo = open_out(dir / "manifest.json");
    mo << m.dump(2) << '\n';
  }
  return st;
}

}  // namespace modint

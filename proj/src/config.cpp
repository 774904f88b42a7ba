#include "modint/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "modint/measures.hpp"

namespace modint {

namespace {

using nlohmann::json;

VelocitySpec parse_velocity(const json& j, int d) {
  VelocitySpec v;
  v.dimension = d;
  v.b_family = j.value("b", std::string("zero"));
  v.b_amplitude = j.value("amplitude", 0.0);
  v.g_family = j.value("g", std::string("truncated"));
  v.g_cap = j.value("cap", 1.0);
  if (j.contains("terms")) {
    for (const auto& t : j.at("terms")) {
      FourierTerm ft;
      const auto k = t.at("k").get<std::vector<int>>();
      if (k.size() > kMaxDim) throw std::invalid_argument("config: wave vector too long");
      std::copy(k.begin(), k.end(), ft.k.begin());
      ft.component = t.value("component", 0);
      ft.amplitude = t.at("amplitude").get<double>();
      ft.sine = t.value("sine", true);
      v.b_terms.push_back(ft);
    }
  }
  return v;
}

json velocity_json(const VelocitySpec& v) {
  json terms = json::array();
  for (const auto& t : v.b_terms)
    terms.push_back({{"k", t.k}, {"component", t.component}, {"amplitude", t.amplitude}, {"sine", t.sine}});
  return {{"b", v.b_family}, {"amplitude", v.b_amplitude}, {"terms", terms}, {"g", v.g_family}, {"cap", v.g_cap}};
}

}  // namespace

StudyConfig parse_config(const json& j) {
  StudyConfig c;
  c.system = j.value("system", c.system);
  if (c.system != "nonlocal" && c.system != "local")
    throw std::invalid_argument("config: system must be 'nonlocal' or 'local'");
  c.dimension = j.value("dimension", c.dimension);
  if (c.dimension < 1 || c.dimension > int(kMaxDim)) throw std::invalid_argument("config: dimension must be 1..3");
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    c.beta = k.value("beta", c.beta);
    c.override_beta_bound = k.value("override_beta_bound", false);
  }
  c.velocity.dimension = c.dimension;
  if (j.contains("velocity")) c.velocity = parse_velocity(j.at("velocity"), c.dimension);
  if (j.contains("energy")) {
    c.energy.family = j.at("energy").value("family", std::string("zero"));
    c.energy.c = j.at("energy").value("c", 0.0);
  }
  c.alpha = j.value("alpha", 0.0);
  if (j.contains("n")) c.n_list = j.at("n").get<std::vector<std::size_t>>();
  for (auto n : c.n_list)
    if (n == 0) throw std::invalid_argument("config: n must be positive");
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (s.is_array()) {
      c.seeds = s.get<std::vector<std::uint64_t>>();
    } else {
      const auto base = s.value("base", std::uint64_t{1});
      const auto count = s.value("count", std::uint64_t{1});
      for (std::uint64_t i = 0; i < count; ++i) c.seeds.push_back(base + i);
    }
  } else {
    c.seeds = {1};
  }
  c.T = j.value("T", c.T);
  c.dt = j.value("dt", c.dt);
  c.M = j.value("M", c.M);
  if (c.T < 0.0 || c.dt < 0.0) throw std::invalid_argument("config: T and dt must be nonnegative");
  if (j.contains("record_times")) c.record_times = j.at("record_times").get<std::vector<double>>();
  for (double t : c.record_times)
    if (t < 0.0 || t > c.T) throw std::invalid_argument("config: record time outside [0, T]");
  if (j.contains("initial")) {
    const auto& i = j.at("initial");
    c.initial.family = i.value("family", c.initial.family);
    c.initial.amplitude = i.value("amplitude", c.initial.amplitude);
    c.initial.mode = i.value("mode", c.initial.mode);
    if (c.initial.family != "uniform" && c.initial.family != "cosine")
      throw std::invalid_argument("config: initial family must be 'uniform' or 'cosine'");
    if (std::abs(c.initial.amplitude) > 1.0) throw std::invalid_argument("config: cosine amplitude must be <= 1");
  }
  if (j.contains("pde")) {
    c.pde_M = j.at("pde").value("M", c.pde_M);
    c.pde_dt = j.at("pde").value("dt", c.pde_dt);
    c.local_form = j.at("pde").value("form", c.local_form);
    parse_local_form(c.local_form);
  }
  if (j.contains("observables")) {
    c.observables.clear();
    for (const auto& k : j.at("observables")) {
      const auto v = k.get<std::vector<int>>();
      if (v.size() > kMaxDim) throw std::invalid_argument("config: wave vector too long");
      std::array<int, kMaxDim> a{};
      std::copy(v.begin(), v.end(), a.begin());
      c.observables.push_back(a);
    }
  }
  c.out_dir = j.value("out_dir", c.out_dir);
  c.threads = j.value("threads", c.threads);
  if (c.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  return c;
}

StudyConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(json::parse(in));
}

json to_json(const StudyConfig& c) {
  return {{"system", c.system},
          {"dimension", c.dimension},
          {"kernel", {{"beta", c.beta}, {"override_beta_bound", c.override_beta_bound}}},
          {"velocity", velocity_json(c.velocity)},
          {"energy", {{"family", c.energy.family}, {"c", c.energy.c}}},
          {"alpha", c.alpha},
          {"n", c.n_list},
          {"seeds", c.seeds},
          {"T", c.T},
          {"dt", c.dt},
          {"M", c.M},
          {"record_times", c.record_times},
          {"initial", {{"family", c.initial.family}, {"amplitude", c.initial.amplitude}, {"mode", c.initial.mode}}},
          {"pde", {{"M", c.pde_M}, {"dt", c.pde_dt}, {"form", c.local_form}}},
          {"observables", c.observables},
          {"out_dir", c.out_dir},
          {"threads", c.threads}};
}

std::string config_hash(const StudyConfig& cfg) {
  json j = to_json(cfg);
  j.erase("threads");
  j.erase("out_dir");
  const std::string s = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DensityField initial_density(const InitialSpec& spec, int d, std::size_t M) {
  if (spec.family == "uniform") return DensityField::uniform(d, M);
  const double a = spec.amplitude;
  const double k = 2.0 * std::numbers::pi * double(spec.mode);
  return DensityField::from_function(d, M, [&](std::span<const double> x) { return 1.0 + a * std::cos(k * x[0]); });
}

KernelSpec kernel_for(const StudyConfig& cfg, std::size_t n) {
  return KernelSpec::make(cfg.dimension, cfg.beta, n, cfg.override_beta_bound);
}

std::size_t grid_points_for(const StudyConfig& cfg, const KernelSpec& kernel) {
  const std::size_t base = cfg.M ? cfg.M : (cfg.dimension == 1 ? 256 : 128);
  return std::max(base, min_resolving_points(kernel));
}

bool is_local(const StudyConfig& cfg) { return cfg.system == "local"; }

ParticleSystem system_for(const StudyConfig& cfg) {
  if (is_local(cfg)) return LocalSystem{build_energy_model(cfg.energy)};
  VelocitySpec v = cfg.velocity;
  v.dimension = cfg.dimension;
  return NonlocalSystem{build_velocity_model(v)};
}

std::vector<TestFunction> observables_for(const StudyConfig& cfg) {
  std::vector<TestFunction> out;
  for (const auto& k : cfg.observables) out.push_back(TestFunction{k});
  return out;
}

std::vector<double> record_times_for(const StudyConfig& cfg) {
  if (!cfg.record_times.empty()) return cfg.record_times;
  if (cfg.T > 0.0) return {0.0, cfg.T};
  return {0.0};
}

PdeRun solve_reference(const StudyConfig& cfg) {
  const DensityField rho0 = initial_density(cfg.initial, cfg.dimension, cfg.pde_M);
  PdeOptions o;
  o.T = cfg.T;
  o.dt = cfg.pde_dt;
  o.record_times = record_times_for(cfg);
  if (is_local(cfg)) return solve_local(rho0, build_energy_model(cfg.energy), parse_local_form(cfg.local_form), o);
  VelocitySpec v = cfg.velocity;
  v.dimension = cfg.dimension;
  return solve_nonlocal(rho0, build_velocity_model(v), o);
}

}  // namespace modint

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "modint/measures.hpp"
#include "modint/pde.hpp"
#include "oracles.hpp"

using namespace modint;

namespace {
DensityField cosine(std::size_t M, double a = 0.5, int k = 1) {
  return DensityField::from_function(1, M, [&](std::span<const double> x) {
    return 1.0 + a * std::cos(2 * oracle::kPi * k * x[0]);
  });
}

// first cosine Fourier coefficient: 2 int rho cos(2 pi x)
double mode1(const DensityField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * std::cos(2 * oracle::kPi * f.node(i)[0]);
  return 2.0 * s * f.cell_volume();
}

AdhesionVelocityModel velocity(const std::string& b, double amp, const std::string& g) {
  VelocitySpec s;
  s.b_family = b;
  s.b_amplitude = amp;
  s.g_family = g;
  s.g_cap = 1.0;
  return build_velocity_model(s);
}

double linf(const DensityField& a, const DensityField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

DensityField restrict2(const DensityField& fine) {
  const std::size_t M = fine.points_per_axis() / 2;
  DensityField c(1, M);
  for (std::size_t i = 0; i < M; ++i) c[i] = 0.5 * (fine[2 * i] + fine[2 * i + 1]);
  return c;
}
}  // namespace

TEST_CASE("heat equation Fourier decay") {
  PdeOptions o;
  o.T = 0.1;
  o.record_times = {0.05, 0.1};
  const auto rho0 = cosine(256);
  const auto heat_nl = velocity("sine", 0.25, "zero");
  const auto heat_loc = build_energy_model({"zero", 0.0});
  PdeOptions arith = o;
  arith.face = FaceAveraging::kArithmetic;
  std::vector<PdeRun> runs{solve_nonlocal(rho0, heat_nl, o), solve_local(rho0, heat_loc, LocalForm::kDiffusion, o),
                           solve_local(rho0, heat_loc, LocalForm::kTransport, arith)};
  for (const auto& r : runs) {
    const double a05 = mode1(r.snapshots[0]);
    CHECK(std::abs(a05 - 0.5 * std::exp(-4 * oracle::kPi * oracle::kPi * 0.05)) < 1e-3);
    CHECK(0.5 * std::exp(-4 * oracle::kPi * oracle::kPi * 0.05) == doctest::Approx(0.0695).epsilon(1e-3));
    const double exact = 0.5 * std::exp(-4 * oracle::kPi * oracle::kPi * 0.1);
    CHECK(std::abs(mode1(r.snapshots[1]) / exact - 1.0) < 1e-3);
    for (double m : r.mass) CHECK(std::abs(m - 1.0) < 1e-8);
  }
  // upwind faces are first order
  const auto up = solve_local(rho0, heat_loc, LocalForm::kTransport, o);
  CHECK(std::abs(mode1(up.final_field) / (0.5 * std::exp(-4 * oracle::kPi * oracle::kPi * 0.1)) - 1.0) < 1e-2);
}

TEST_CASE("uniform state is a fixed point") {
  PdeOptions o;
  o.T = 0.05;
  o.record_times = {0.05};
  const auto one = DensityField::uniform(1, 128);
  const auto nl = solve_nonlocal(one, velocity("sine", 0.25, "truncated"), o);
  CHECK(linf(nl.final_field, one) < 1e-10);
  const auto em = build_energy_model({"derouler", 0.6});
  for (auto form : {LocalForm::kDiffusion, LocalForm::kTransport}) CHECK(solve_local(one, em, form, o).final_field == one);
}

TEST_CASE("mass conservation and dt policing") {
  const auto rho0 = cosine(128);
  const auto vm = velocity("sine", 0.25, "truncated");
  PdeOptions o;
  o.T = 0.2;
  o.record_times = {0.0, 0.05, 0.1, 0.2};
  const auto r = solve_nonlocal(rho0, vm, o);
  CHECK(r.times.size() == 4);
  for (double m : r.mass) CHECK(std::abs(m - 1.0) < 1e-8);
  CHECK(r.max_mass_drift < 1e-8 * o.T + 1e-15);
  CHECK(r.dt <= r.dt_bound());
  o.dt = 2.0 * r.dt_bound();
  CHECK_THROWS_AS(solve_nonlocal(rho0, vm, o), std::invalid_argument);
  o.dt = 0.0;
  o.record_times = {0.3};
  CHECK_THROWS_AS(solve_nonlocal(rho0, vm, o), std::invalid_argument);
  DensityField neg = rho0;
  neg[3] = -0.1;
  o.record_times = {};
  CHECK_THROWS_AS(solve_nonlocal(neg, vm, o), std::invalid_argument);
  const auto j = r.manifest();
  CHECK(j.at("M") == 128);
  CHECK(j.contains("stability_bounds"));
  CHECK(j.contains("mass_drift"));
}

TEST_CASE("diffusion and transport forms agree") {
  const auto em = build_energy_model({"derouler", 0.6});
  PdeOptions o;
  o.T = 0.1;
  o.face = FaceAveraging::kArithmetic;
  std::vector<double> gaps;
  for (std::size_t M : {128u, 256u}) {
    const double h = 1.0 / double(M);
    o.dt = 0.5 * h * h / (2.0 * 1.15);
    const auto rho0 = cosine(M);
    const auto a = solve_local(rho0, em, LocalForm::kDiffusion, o);
    const auto b = solve_local(rho0, em, LocalForm::kTransport, o);
    const double gap = linf(a.final_field, b.final_field);
    CHECK(gap <= 5.0 * (h * h + o.dt));
    gaps.push_back(gap);
  }
  CHECK(std::log2(gaps[0] / gaps[1]) >= 1.0);
}

TEST_CASE("comparison principle for the diffusion form") {
  const auto em = build_energy_model({"derouler", 0.6});
  const auto rho0 = DensityField::from_function(1, 128, [](std::span<const double> x) {
    return 1.0 + 0.6 * std::cos(2 * oracle::kPi * x[0]) + 0.3 * std::sin(6 * oracle::kPi * x[0]);
  });
  PdeOptions o;
  o.T = 0.05;
  o.record_times = {0.01, 0.02, 0.03, 0.04, 0.05};
  const auto r = solve_local(rho0, em, LocalForm::kDiffusion, o);
  double lo = 1e300, hi = -1e300;
  for (double v : rho0.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (const auto& s : r.snapshots)
    for (double v : s.values()) {
      CHECK(v >= lo - 1e-8);
      CHECK(v <= hi + 1e-8);
    }
}

TEST_CASE("grid refinement") {
  const auto vm = velocity("sine", 0.25, "truncated");
  const auto em = build_energy_model({"derouler", 0.6});
  auto solve = [&](std::size_t M, int which) {
    PdeOptions o;
    o.T = 0.05;
    const double h = 1.0 / double(M);
    o.dt = 0.2 * h * h;
    const auto rho0 = cosine(M, 0.5, 2);
    if (which == 0) return solve_nonlocal(rho0, vm, o).final_field;
    return solve_local(rho0, em, which == 1 ? LocalForm::kDiffusion : LocalForm::kTransport, o).final_field;
  };
  for (int which : {0, 1, 2}) {
    const auto f64 = solve(64, which), f128 = solve(128, which), f256 = solve(256, which);
    const double d1 = field_distance(f64, restrict2(f128), Metric::kL1);
    const double d2 = field_distance(f128, restrict2(f256), Metric::kL1);
    CHECK(std::log2(d1 / d2) >= 1.0);
  }
}

TEST_CASE("gronwall gap") {
  const auto rho_a = cosine(256);
  const auto rho_b = DensityField::from_function(1, 256, [](std::span<const double> x) {
    return 1.0 + 0.5 * std::cos(2 * oracle::kPi * x[0]) + 0.1 * std::cos(4 * oracle::kPi * x[0]);
  });
  PdeOptions o;
  o.T = 0.1;
  const auto vm = velocity("sine", 0.25, "truncated");
  const auto same = gronwall_gap(vm, rho_a, rho_a, o);
  for (double r : same.ratios) CHECK(r == 0.0);

  const auto g = gronwall_gap(vm, rho_a, rho_b, o);
  CHECK(g.report.passed());
  CHECK(g.sup_ratio <= g.bound);
  CHECK(g.margin >= 10.0);
  // exp{(T c² + Lip² ||rho~||²) |b|²} with c = 1/2, Lip = 1, |b| = 1/4
  CHECK(g.bound > 1.0);
  CHECK(g.bound < std::exp((0.1 + 0.2) * 0.0625));

  const auto heat = gronwall_gap(velocity("zero", 0.0, "truncated"), rho_a, rho_b, o);
  CHECK(heat.report.passed());
  for (double r : heat.ratios) CHECK(r <= 1.0 + 1e-12);
}

TEST_CASE("pde output files") {
  PdeOptions o;
  o.T = 0.01;
  o.record_times = {0.0, 0.01};
  const auto r = solve_local(cosine(32), build_energy_model({"zero", 0.0}), LocalForm::kDiffusion, o);
  const auto dir = std::filesystem::temp_directory_path() / "modint_pde_out_test";
  std::filesystem::remove_all(dir);
  write_pde_run(r, dir);
  CHECK(std::filesystem::exists(dir / "snapshot_0.csv"));
  CHECK(std::filesystem::exists(dir / "snapshot_1.csv"));
  std::ifstream in(dir / "manifest.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("scheme") == "local/diffusion");
  std::filesystem::remove_all(dir);
}

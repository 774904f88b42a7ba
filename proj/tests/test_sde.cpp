#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <random>

#include "modint/measures.hpp"
#include "modint/sde.hpp"
#include "oracles.hpp"

using namespace modint;

namespace {
ParticleConfig random_particles(int d, std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<double> c(n * std::size_t(d));
  for (auto& v : c) v = u(gen);
  return ParticleConfig(d, std::move(c));
}

AdhesionVelocityModel velocity(const std::string& b, double amp, const std::string& g, int d = 1) {
  VelocitySpec s;
  s.dimension = d;
  s.b_family = b;
  s.b_amplitude = amp;
  s.g_family = g;
  s.g_cap = 1.0;
  return build_velocity_model(s);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}
}  // namespace

TEST_CASE("vanishing drifts") {
  const auto k = KernelSpec::make(1, 1.0 / 3.0, 1000);
  const auto p = random_particles(1, 500, 1);
  CHECK(max_abs(drift_nonlocal(p, k, velocity("sine", 0.5, "zero"), 256)) == 0.0);
  CHECK(max_abs(drift_nonlocal(p, k, velocity("zero", 0.0, "truncated"), 256)) == 0.0);
  CHECK(max_abs(drift_local(p, k, build_energy_model({"zero", 0.0}), 256)) == 0.0);

  // uniform mollified field: gradient of a constant, and b * g(1) = g(1) int b = 0
  DriftEvaluator local(LocalSystem{build_energy_model({"derouler", 0.6})}, k, 256);
  for (const auto& c : local.drift_field(DensityField::uniform(1, 256))) CHECK(max_abs(c) < 1e-12);
  DriftEvaluator nonlocal(NonlocalSystem{velocity("sine", 0.25, "truncated")}, k, 256);
  for (const auto& c : nonlocal.drift_field(DensityField::uniform(1, 256))) CHECK(max_abs(c) < 1e-12);
}

TEST_CASE("single-particle non-local drift against quadrature") {
  const double beta = 1.0 / 3.0;
  const auto k = KernelSpec::make(1, beta, 100);
  for (const char* fam : {"sine", "cosine"}) {
    VelocitySpec s;
    s.g_family = "truncated";
    s.g_cap = 1.0;
    if (std::string(fam) == "sine") {
      s.b_family = "sine";
      s.b_amplitude = 0.5;
    } else {
      s.b_family = "fourier";
      FourierTerm t;
      t.k[0] = 1;
      t.amplitude = 0.5;
      t.sine = false;
      s.b_terms = {t};
    }
    const auto vm = build_velocity_model(s);
    for (double X : {0.0, 0.137, -0.41}) {
      const auto d = drift_nonlocal(ParticleConfig(1, std::vector<double>{X}), k, vm, 2048);
      // (b * g(w^n(. - X)))(X) = int b(z) min(w^n(z), 1) dz
      const double hw = k.support_halfwidth();
      const double oracle = oracle::simpson([&](double z) {
        const double x[] = {z};
        return vm.b.eval(x)[0] * std::min(oracle::w1d(z, 100.0, beta), 1.0);
      }, -hw, hw, 200000);
      CHECK(d[0] == doctest::Approx(oracle).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("single-particle local drift cancels by symmetry") {
  const auto k = KernelSpec::make(1, 1.0 / 3.0, 1000);
  const std::size_t M = 512;
  const auto em = build_energy_model({"derouler", 0.6});
  const DensityField grid(1, M);
  for (std::size_t node : {0u, 100u, 301u}) {
    const double X = grid.node_coordinate(node);
    CHECK(std::abs(drift_local(ParticleConfig(1, std::vector<double>{X}), k, em, M)[0]) < 1e-8);
    CHECK(std::abs(drift_local(ParticleConfig(1, std::vector<double>{X}), k, em, M, LocalDriftOrdering::kGradientField)[0]) < 1e-8);
  }
}

TEST_CASE("local drift orderings agree within grid error") {
  const auto k = KernelSpec::make(1, 1.0 / 3.0, 1000);
  const auto em = build_energy_model({"derouler", 0.6});
  const auto p = sample_iid(DensityField::from_function(1, 512, [](std::span<const double> x) {
    return 1.0 + 0.5 * std::cos(2 * oracle::kPi * x[0]);
  }), 1000, 4);
  auto run = [&](std::size_t M, LocalDriftOrdering o) { return drift_local(p, k, em, M, o); };
  auto diff = [](const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  };
  const auto ref = run(4096, LocalDriftOrdering::kGradientKernel);
  for (std::size_t M : {256u, 512u}) {
    const auto a = run(M, LocalDriftOrdering::kGradientKernel);
    const auto b = run(M, LocalDriftOrdering::kGradientField);
    const double grid_error = std::max(diff(a, ref), diff(b, ref));
    CHECK(diff(a, b) <= 2.0 * grid_error);
    CHECK(diff(a, b) < 0.05 * max_abs(a));
  }
}

TEST_CASE("non-local drift is bounded by 2c|b|") {
  const auto vm = velocity("sine", 0.5, "truncated");
  for (std::size_t n : {10u, 1000u}) {
    const auto k = KernelSpec::make(1, 1.0 / 3.0, n);
    for (unsigned s = 0; s < 5; ++s) {
      const auto p = random_particles(1, n, 100 + s);
      CHECK(max_abs(drift_nonlocal(p, k, vm, 256)) <= vm.drift_bound() + 1e-12);
    }
  }
  const auto vm2 = velocity("attraction", 0.1, "saturating", 2);
  const auto k2 = KernelSpec::make(2, 0.5, 100);
  const auto p2 = random_particles(2, 100, 7);
  CHECK(max_abs(drift_nonlocal(p2, k2, vm2, 64)) <= vm2.drift_bound() + 1e-12);
}

TEST_CASE("Euler-Maruyama step") {
  SimState s;
  s.seed = 17;
  s.particles = ParticleConfig(1, 100000, 0.0);
  const std::vector<double> zero(100000, 0.0);
  const double dt = 1e-4;
  const auto next = em_step(s, zero, dt);
  CHECK(next.step == 1);
  CHECK(next.t == doctest::Approx(dt));
  double m = 0.0, v = 0.0;
  for (double x : next.particles.coords()) m += x;
  m /= 100000.0;
  for (double x : next.particles.coords()) v += (x - m) * (x - m);
  v /= 99999.0;
  // Var = 2 dt with relative standard error sqrt(2/(N-1))
  CHECK(std::abs(v - 2 * dt) <= 3 * 2 * dt * std::sqrt(2.0 / 99999.0));
  CHECK(em_step(s, zero, dt) == next);

  const auto same = em_step(s, zero, 0.0);
  CHECK(same.particles == s.particles);
  CHECK(same.step == 1);
  CHECK_THROWS_AS(em_step(s, zero, -1.0), std::invalid_argument);

  SimState s3;
  s3.particles = random_particles(3, 10, 2);
  const std::vector<double> drift(30, 0.3);
  const auto t3 = em_step(s3, drift, 0.01);
  for (double x : t3.particles.coords()) {
    CHECK(x >= -0.5);
    CHECK(x < 0.5);
  }
}

TEST_CASE("test functions") {
  TestFunction f{{1, 2, 0}};
  const double x[] = {0.13, -0.27};
  const double e = 1e-5;
  const auto g = f.gradient(x);
  double lap = 0.0;
  for (int j = 0; j < 2; ++j) {
    double xp[] = {x[0], x[1]}, xm[] = {x[0], x[1]};
    xp[j] += e;
    xm[j] -= e;
    CHECK(g[j] == doctest::Approx((f.value(xp) - f.value(xm)) / (2 * e)).epsilon(1e-6));
    lap += (f.value(xp) - 2 * f.value(x) + f.value(xm)) / (e * e);
  }
  CHECK(f.laplacian(x) == doctest::Approx(lap).epsilon(1e-4));
  CHECK(TestFunction{}.value(x) == 1.0);
  CHECK(TestFunction{}.name() == "one");
}

TEST_CASE("simulate") {
  const auto k = KernelSpec::make(1, 1.0 / 3.0, 1000);
  const ParticleSystem heat = LocalSystem{build_energy_model({"zero", 0.0})};
  const auto init = sample_iid(DensityField::uniform(1, 64), 1000, 3);

  SUBCASE("T = 0 records only the initial snapshot") {
    SimOptions o;
    o.record_times = {0.0};
    const auto r = simulate(init, heat, k, o);
    REQUIRE(r.times.size() == 1);
    CHECK(r.steps == 0);
    CHECK(r.snapshots.front() == mollify(init, k, 256));
    CHECK(r.final_state.particles == init);
  }
  SUBCASE("record times outside [0, T] are rejected") {
    SimOptions o;
    o.T = 0.1;
    o.dt = 0.01;
    o.record_times = {0.2};
    CHECK_THROWS_AS(simulate(init, heat, k, o), std::invalid_argument);
  }
  SUBCASE("uniform law is stationary under the driftless dynamics") {
    const auto k5 = KernelSpec::make(1, 1.0 / 3.0, 100000);
    SimOptions o;
    o.T = 0.5;
    o.dt = 0.01;
    o.record_times = {0.5};
    o.track_integrals = false;
    o.record_diagnostics = false;
    const auto r = simulate(sample_iid(DensityField::uniform(1, 64), 100000, 8), heat, k5, o);
    const auto& f = r.snapshots.back();
    CHECK(field_distance(f, DensityField::uniform(1, f.points_per_axis()), Metric::kL2) < 0.15);
    CHECK(r.final_state.particles.size() == 100000);
  }
  SUBCASE("diagnostics are recorded and valid") {
    SimOptions o;
    o.T = 0.02;
    o.dt = 0.002;
    o.record_times = {0.0, 0.01, 0.02};
    o.seed = 5;
    const ParticleSystem loc = LocalSystem{build_energy_model({"derouler", 0.6})};
    const auto r = simulate(init, loc, k, o);
    REQUIRE(r.diagnostics.size() == 3);
    for (const auto& d : r.diagnostics) {
      CHECK(d.entropy >= 0.0);
      CHECK(d.fisher >= 0.0);
      CHECK(d.l2sq >= 1.0 - 1e-9);
    }
    CHECK(r.fisher_integral.front() == 0.0);
    CHECK(r.fisher_integral.back() > 0.0);
    CHECK(r.steps == 10);
  }
  SUBCASE("checkpoint resume is bitwise identical") {
    const ParticleSystem nl = NonlocalSystem{velocity("sine", 0.25, "truncated")};
    SimOptions full;
    full.T = 0.02;
    full.dt = 0.001;
    full.seed = 21;
    full.record_times = {0.01, 0.02};
    full.track_integrals = false;
    const auto a = simulate(init, nl, k, full);

    const auto path = std::filesystem::temp_directory_path() / "modint_ckpt_test.bin";
    SimOptions half = full;
    half.T = 0.01;
    half.record_times = {0.01};
    half.checkpoint_path = path;
    simulate(init, nl, k, half);
    const SimState restored = read_checkpoint(path);
    CHECK(restored.t == 0.01);
    CHECK(restored.seed == 21);
    SimOptions rest = full;
    rest.record_times = {0.02};
    const auto b = simulate_from(restored, nl, k, rest);
    CHECK(b.final_state == a.final_state);
    std::filesystem::remove(path);
  }
}

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <functional>
#include <random>

#include "modint/field.hpp"
#include "modint/models.hpp"
#include "oracles.hpp"

using namespace modint;

TEST_CASE("g functions") {
  const auto t = GFunction::truncated(1.0);
  CHECK(t(0.5) == 0.5);
  CHECK(t(3.0) == 1.0);
  CHECK(t.lipschitz() == 1.0);
  for (double z = 0.0; z < 50.0; z += 0.25) CHECK(t(z) <= 1.0 * (1.0 + z));
  CHECK_THROWS_AS(GFunction::truncated(0.0), std::invalid_argument);
  CHECK_THROWS_AS(GFunction::truncated(-1.0), std::invalid_argument);

  const auto s = GFunction::saturating();
  CHECK(s.lipschitz() == 1.0);
  // sampled derivative 1/(1+z)² is largest at 0
  double best = 0.0;
  for (double z = 0.0; z < 10.0; z += 1e-3) best = std::max(best, (s(z + 1e-6) - s(z)) / 1e-6);
  CHECK(best == doctest::Approx(1.0).epsilon(1e-5));
  for (double z = 0.0; z < 50.0; z += 0.25) CHECK(s(z) <= s.growth() * (1.0 + z) + 1e-15);
}

TEST_CASE("velocity models") {
  VelocitySpec spec;
  spec.b_family = "sine";
  spec.b_amplitude = 0.5;
  spec.g_family = "truncated";
  spec.g_cap = 1.0;
  const auto vm = build_velocity_model(spec);
  CHECK(vm.b_sup == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(vm.lip_g == 1.0);
  CHECK(vm.drift_bound() == doctest::Approx(2.0 * vm.growth_c * 0.5));
  CHECK(validate_velocity_model(vm).passed());
  CHECK(vm.b.mean()[0] == 0.0);

  spec.dimension = 2;
  spec.b_family = "attraction";
  spec.b_amplitude = 0.1;
  spec.g_family = "saturating";
  const auto att = build_velocity_model(spec);
  // b = -2 pi s (sin 2 pi x, sin 2 pi y): sup of the norm is 2 pi s sqrt 2
  CHECK(att.b_sup == doctest::Approx(2 * oracle::kPi * 0.1 * std::sqrt(2.0)).epsilon(1e-6));
  CHECK(validate_velocity_model(att).passed());
  const double x[] = {0.1, -0.2};
  const auto v = att.b.eval(x);
  CHECK(v[0] == doctest::Approx(-2 * oracle::kPi * 0.1 * std::sin(2 * oracle::kPi * 0.1)));

  spec.g_family = "truncated";
  spec.g_cap = -1.0;
  CHECK_THROWS_AS(build_velocity_model(spec), std::invalid_argument);
}

TEST_CASE("derouler closed forms") {
  const auto m = build_energy_model({"derouler", 0.6});
  CHECK(m.lambda() == doctest::Approx(0.15));
  CHECK(m.P(1.0) == doctest::Approx(1.1).epsilon(1e-14));
  CHECK(0.5 * m.d2u(0.5) == doctest::Approx(0.15).epsilon(1e-14));
  // integrate u'' twice from u(0) = u'(0) = 0
  for (double z : {0.1, 0.5, 0.9, 1.0, 1.7, 4.0}) {
    // split at the kink z = 1
    auto integral = [](const std::function<double(double)>& f, double b, int m) {
      if (b <= 1.0) return oracle::simpson(f, 0.0, b, m);
      return oracle::simpson(f, 0.0, 1.0, m) + oracle::simpson(f, 1.0, b, m);
    };
    const double du = integral([&](double s) { return m.d2u(s); }, z, 4000);
    const double u = integral([&](double s) { return integral([&](double r) { return m.d2u(r); }, s, 400); }, z, 400);
    CHECK(m.du(z) == doctest::Approx(du).epsilon(1e-8).scale(1.0));
    CHECK(m.u(z) == doctest::Approx(u).epsilon(1e-7).scale(1.0));
    CHECK(m.P(z) == doctest::Approx(z * m.du(z) - m.u(z) + z).epsilon(1e-13).scale(1.0));
    CHECK(m.F(z) == doctest::Approx(m.u(z) + z * std::log(z)).epsilon(1e-13).scale(1.0));
  }
  double lam = 0.0;
  for (double z = 0.0; z < 5.0; z += 1e-4) lam = std::max(lam, std::abs(z * m.d2u(z)));
  CHECK(lam == doctest::Approx(m.lambda()).epsilon(1e-6));
}

TEST_CASE("zero energy is the heat equation") {
  const auto m = build_energy_model({"zero", 0.0});
  CHECK(m.is_zero());
  CHECK(m.lambda() == 0.0);
  for (double z : {0.01, 0.5, 2.0}) {
    CHECK(m.P(z) == doctest::Approx(z));
    CHECK(m.F(z) == doctest::Approx(z * std::log(z)));
  }
  CHECK(m.F(0.0) == 0.0);
}

TEST_CASE("energy validation") {
  for (int d : {1, 2}) {
    CHECK(validate_energy_model(build_energy_model({"zero", 0.0}), d).passed());
    CHECK(validate_energy_model(build_energy_model({"derouler", 0.6}), d).passed());
  }
  const auto near = build_energy_model({"derouler", 3.99});
  const auto rep = validate_energy_model(near, 1);
  REQUIRE(rep.find("lambda_below_one") != nullptr);
  CHECK(rep.find("lambda_below_one")->passed);
  REQUIRE(rep.find("lambda_margin") != nullptr);
  CHECK_FALSE(rep.find("lambda_margin")->passed);
  CHECK(rep.find("lambda_margin")->advisory);
  CHECK_THROWS_AS(build_energy_model({"derouler", 4.0}), std::invalid_argument);
  CHECK_THROWS_AS(build_energy_model({"quadratic", 1.0}), std::invalid_argument);
  CHECK(default_alpha(1) == doctest::Approx(1.0 / 3.0 + 0.01));
}

TEST_CASE("pressure identity on the grid") {
  // div(rho grad u'(rho)) + Laplacian rho = Laplacian P(rho), by centred differences
  const auto m = build_energy_model({"derouler", 0.6});
  double prev = 0.0;
  for (std::size_t M : {128u, 256u}) {
    const double h = 1.0 / double(M);
    const auto rho = DensityField::from_function(1, M, [](std::span<const double> x) {
      return 1.0 + 0.5 * std::cos(2 * oracle::kPi * x[0]) + 0.2 * std::sin(4 * oracle::kPi * x[0]);
    });
    double worst = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      const std::size_t l = (i + M - 1) % M, r = (i + 1) % M;
      const double fr = 0.5 * (rho[i] + rho[r]) * (m.du(rho[r]) - m.du(rho[i])) / h;
      const double fl = 0.5 * (rho[l] + rho[i]) * (m.du(rho[i]) - m.du(rho[l])) / h;
      const double lhs = (fr - fl) / h + (rho[r] - 2 * rho[i] + rho[l]) / (h * h);
      const double rhs = (m.P(rho[r]) - 2 * m.P(rho[i]) + m.P(rho[l])) / (h * h);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    if (prev > 0.0) CHECK(worst < 0.6 * prev);
    prev = worst;
  }
  CHECK(prev < 0.05);
}

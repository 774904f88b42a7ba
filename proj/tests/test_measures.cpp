#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "modint/measures.hpp"
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

DensityField random_field(std::size_t M, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  DensityField f(1, M);
  for (auto& v : f.values()) v = u(gen);
  const double m = f.total_mass();
  for (auto& v : f.values()) v /= m;
  return f;
}
}  // namespace

TEST_CASE("sample_iid") {
  SUBCASE("uniform histogram concentration") {
    const auto p = sample_iid(DensityField::uniform(1, 64), 100000, 5);
    std::vector<double> counts(16, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) counts[std::size_t((p.point(i)[0] + 0.5) * 16)] += 1.0;
    const double expected = 100000.0 / 16;
    for (double c : counts) CHECK(std::abs(c - expected) <= 4 * std::sqrt(expected));
  }
  SUBCASE("one hot cell") {
    DensityField f(1, 32, 0.0);
    f[5] = 32.0;
    const auto p = sample_iid(f, 1000, 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p.point(i)[0] >= f.node_coordinate(5) - 0.5 / 32);
      CHECK(p.point(i)[0] < f.node_coordinate(5) + 0.5 / 32);
    }
  }
  SUBCASE("determinism and rejection") {
    const auto f = DensityField::uniform(2, 8);
    CHECK(sample_iid(f, 100, 3) == sample_iid(f, 100, 3));
    CHECK_FALSE(sample_iid(f, 100, 3) == sample_iid(f, 100, 4));
    CHECK_THROWS_AS(sample_iid(DensityField(1, 8, 0.0), 10, 1), std::invalid_argument);
    DensityField neg(1, 8, 1.0);
    neg[2] = -0.5;
    CHECK_THROWS_AS(sample_iid(neg, 10, 1), std::invalid_argument);
  }
}

TEST_CASE("mollify") {
  const auto k = KernelSpec::make(1, 1.0 / 3.0, 1000);
  const std::size_t M = 256;
  SUBCASE("single particle reproduces the sampled kernel") {
    const auto f = mollify(ParticleConfig(1, 1, 0.0), k, M);
    for (std::size_t i = 0; i < M; ++i)
      CHECK(f[i] == doctest::Approx(oracle::w1d(f.node(i)[0], 1000.0, 1.0 / 3.0)).epsilon(1e-12).scale(1.0));
    const auto g = mollify(ParticleConfig(1, 50, 0.0), k, M);
    for (std::size_t i = 0; i < M; ++i) CHECK(g[i] == doctest::Approx(f[i]).epsilon(1e-13).scale(1.0));
  }
  SUBCASE("direct sum against the brute-force oracle") {
    const auto p = random_particles(1, 300, 9);
    const auto f = mollify(p, k, M);
    for (std::size_t i = 0; i < M; i += 7) {
      double s = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) s += oracle::w1d(p.point(j)[0] - f.node(i)[0], 1000.0, 1.0 / 3.0);
      CHECK(f[i] == doctest::Approx(s / 300.0).epsilon(1e-10).scale(1.0));
    }
    CHECK(f.total_mass() == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("direct and deposition paths agree") {
    const auto p = random_particles(1, 1000, 10);
    const std::size_t fine = 2048;
    const auto a = mollify(p, k, fine, MollifyMethod::kDirect);
    const auto b = mollify(p, k, fine, MollifyMethod::kDeposition);
    CHECK(field_distance(a, b, Metric::kL1) / a.total_mass() < 1e-3);
    CHECK(b.total_mass() == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("d=2 mass and agreement") {
    const auto k2 = KernelSpec::make(2, 0.5, 100);
    const auto p = random_particles(2, 200, 12);
    const auto a = mollify(p, k2, 128, MollifyMethod::kDirect);
    const auto b = mollify(p, k2, 128, MollifyMethod::kDeposition);
    CHECK(a.total_mass() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(field_distance(a, b, Metric::kL1) < 1e-2);
  }
  SUBCASE("deposition is exactly translation equivariant on the grid") {
    const auto p = random_particles(1, 100, 13);
    std::vector<double> shifted(p.coords().begin(), p.coords().end());
    const int s = 5;
    for (auto& x : shifted) x += double(s) / double(M);
    const auto a = mollify(p, k, M, MollifyMethod::kDeposition);
    const auto b = mollify(ParticleConfig(1, shifted), k, M, MollifyMethod::kDeposition);
    for (std::size_t i = 0; i < M; ++i) CHECK(b[(i + s) % M] == doctest::Approx(a[i]).epsilon(1e-9).scale(1.0));
  }
  SUBCASE("uniform samples are close to the constant density") {
    const auto k4 = KernelSpec::make(1, 1.0 / 3.0, 10000);
    const auto f = mollify(sample_iid(DensityField::uniform(1, 64), 10000, 2), k4, 256);
    CHECK(field_distance(f, DensityField::uniform(1, 256), Metric::kL2) < 0.1);
  }
  SUBCASE("coarse grids are rejected") {
    CHECK(min_resolving_points(k) == 80);
    CHECK_THROWS_AS(mollify(ParticleConfig(1, 1, 0.0), k, 64), GridResolutionError);
    CHECK_NOTHROW(mollify(ParticleConfig(1, 1, 0.0), k, 80));
  }
}

TEST_CASE("eval_field_at") {
  const auto c = DensityField(2, 8, 3.0);
  const double pt[] = {0.123, -0.377};
  CHECK(eval_field_at(c, pt) == doctest::Approx(3.0));
  const auto f = DensityField::from_function(1, 16, [](std::span<const double> x) { return 2.0 + x[0]; });
  const double node[] = {f.node(4)[0]};
  CHECK(eval_field_at(f, node) == f[4]);
  const double mid[] = {0.5 * (f.node(4)[0] + f.node(5)[0])};
  CHECK(eval_field_at(f, mid) == doctest::Approx(0.5 * (f[4] + f[5])));
  // across the periodic seam: between the last and first nodes
  const double seam[] = {-0.5};
  CHECK(eval_field_at(f, seam) == doctest::Approx(0.5 * (f[15] + f[0])));
}

TEST_CASE("field_distance") {
  const std::size_t M = 512;
  const auto one = DensityField::uniform(1, M);
  const auto cosf = DensityField::from_function(1, M, [](std::span<const double> x) {
    return 1.0 + 0.5 * std::cos(2 * oracle::kPi * x[0]);
  });
  for (auto m : {Metric::kL1, Metric::kL2, Metric::kW1}) CHECK(field_distance(cosf, cosf, m) == 0.0);
  CHECK(field_distance(one, cosf, Metric::kL2) == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(field_distance(one, cosf, Metric::kL1) == doctest::Approx(1.0 / oracle::kPi).epsilon(1e-5));
  // W1 on the circle between 1 and 1 + a cos(2 pi x): int |D - median| with D = a sin(2 pi x)/(2 pi)
  CHECK(field_distance(one, cosf, Metric::kW1) == doctest::Approx(0.5 / (oracle::kPi * oracle::kPi)).epsilon(1e-5));

  DensityField a(1, 16, 0.0), b(1, 16, 0.0);
  a[2] = 16.0;
  b[6] = 16.0;
  CHECK(field_distance(a, b, Metric::kW1) == doctest::Approx(0.25).epsilon(1e-12));
  DensityField c(1, 16, 0.0);
  c[14] = 16.0;
  // 2 -> 14 is 12 cells forward or 4 cells backward on the circle
  CHECK(field_distance(a, c, Metric::kW1) == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(field_distance(DensityField::uniform(2, 8), DensityField::uniform(2, 8), Metric::kW1),
                  std::invalid_argument);
  CHECK_THROWS_AS(field_distance(DensityField::uniform(1, 8), DensityField::uniform(1, 16), Metric::kL2),
                  std::invalid_argument);

  for (unsigned s = 0; s < 20; ++s) {
    const auto f = random_field(64, 3 * s), g = random_field(64, 3 * s + 1), h = random_field(64, 3 * s + 2);
    for (auto m : {Metric::kL1, Metric::kL2, Metric::kW1}) {
      const double fg = field_distance(f, g, m), gf = field_distance(g, f, m);
      CHECK(fg == doctest::Approx(gf).epsilon(1e-12));
      CHECK(fg > 0.0);
      CHECK(fg <= field_distance(f, h, m) + field_distance(h, g, m) + 1e-12);
    }
  }
  CHECK(parse_metric("W1_1d") == Metric::kW1);
  CHECK(parse_metric("L2") == Metric::kL2);
}

#include <doctest.h>

#include <cmath>
#include <set>

#include "modint/rng.hpp"

using namespace modint;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::generate(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, K{0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::generate(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are distinct and reproducible") {
  std::set<Philox4x32::Counter> seen;
  for (std::uint64_t seed : {1ull, 2ull})
    for (auto tag : {StreamTag::kInitialSample, StreamTag::kBrownian})
      for (std::uint64_t i = 0; i < 50; ++i)
        for (std::uint64_t s = 0; s < 20; ++s)
          for (std::uint32_t b = 0; b < 2; ++b) seen.insert(draw(seed, tag, i, s, b));
  CHECK(seen.size() == 2u * 2u * 50u * 20u * 2u);
  CHECK(draw(5, StreamTag::kBrownian, 3, 4) == draw(5, StreamTag::kBrownian, 3, 4));
}

TEST_CASE("uniforms lie strictly inside (0, 1) and normals have unit moments") {
  CHECK(to_unit_open(0, 0) > 0.0);
  CHECK(to_unit_open(0xffffffffu, 0xffffffffu) < 1.0);
  const int N = 200000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < N / 2; ++i) {
    const auto z = normal_pair(draw(9, StreamTag::kBrownian, std::uint64_t(i), 0));
    for (double v : z) {
      s1 += v;
      s2 += v * v;
      s4 += v * v * v * v;
    }
  }
  const double m1 = s1 / N, m2 = s2 / N, m4 = s4 / N;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(double(N)));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / N));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / N));
}

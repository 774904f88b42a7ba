#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace modint {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every draw is a pure function of (key, counter), so a particle's noise at a
/// given step does not depend on how work is scheduled across threads.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
      const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
      const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

  static Key key_from_seed(std::uint64_t seed) noexcept {
    return {std::uint32_t(seed), std::uint32_t(seed >> 32)};
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Stream tags keep independent uses of one seed on disjoint counters.
enum class StreamTag : std::uint32_t { kInitialSample = 1, kBrownian = 2, kConfiguration = 3 };

/// Uniform double in (0, 1) from two 32-bit words (52 random bits).
inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((std::uint64_t(hi) << 32) | lo) >> 12;
  return (double(bits) + 0.5) * 0x1.0p-52;
}

/// Four words -> two independent uniforms in (0, 1).
inline std::array<double, 2> uniform_pair(const Philox4x32::Counter& r) noexcept {
  return {to_unit_open(r[0], r[1]), to_unit_open(r[2], r[3])};
}

/// Four words -> two independent standard normals (Box-Muller).
inline std::array<double, 2> normal_pair(const Philox4x32::Counter& r) noexcept {
  const auto [u1, u2] = uniform_pair(r);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

/// Draw `block` of stream `tag` for entity `index` at `step`.
inline Philox4x32::Counter draw(std::uint64_t seed, StreamTag tag, std::uint64_t index, std::uint64_t step,
                                std::uint32_t block = 0) noexcept {
  const Philox4x32::Counter ctr{std::uint32_t(index), std::uint32_t(index >> 32) ^ (block << 16),
                                std::uint32_t(step), std::uint32_t(tag) << 24 ^ std::uint32_t(step >> 32)};
  return Philox4x32::generate(ctr, Philox4x32::key_from_seed(seed));
}

}  // namespace modint

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace mzsel {

// SplitMix64 (Steele, Lea, Flood 2014). The i-th output (0-based) of a
// generator seeded with s is mix(s + (i + 1) * kGamma), so streams are
// seekable. This is the only entropy source in the library.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t i) noexcept {
    return mix(seed + (i + 1) * kGamma);
  }

  constexpr std::uint64_t next() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept { return to_unit(next()); }

  /// Uniform integer in [0, bound) by rejection of the biased low range.
  /// bound must be nonzero.
  constexpr std::uint64_t bounded(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  static constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Box-Muller on two consecutive SplitMix64 outputs. Standard normal k of a
// stream is element k % 2 of pair k / 2, where pair p consumes outputs 2p
// (radius) and 2p + 1 (angle).
inline std::pair<double, double> box_muller(std::uint64_t radius_bits, std::uint64_t angle_bits) {
  const double u1 = 1.0 - SplitMix64::to_unit(radius_bits);  // (0, 1]
  const double u2 = SplitMix64::to_unit(angle_bits);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) noexcept : rng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const std::uint64_t a = rng_.next();
    const std::uint64_t b = rng_.next();
    auto [z0, z1] = box_muller(a, b);
    spare_ = z1;
    has_spare_ = true;
    return z0;
  }

 private:
  SplitMix64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Standard normal number `index` of the stream seeded with `seed`, without
/// generating the prefix.
inline double gaussian_at(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t pair = index / 2;
  auto [z0, z1] = box_muller(SplitMix64::at(seed, 2 * pair), SplitMix64::at(seed, 2 * pair + 1));
  return (index % 2 == 0) ? z0 : z1;
}

}  // namespace mzsel

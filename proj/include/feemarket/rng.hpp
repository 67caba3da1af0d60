#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace feemarket {

/// SplitMix64 (Steele, Lea, Flood 2014). Version tag "splitmix64-v1".
///
/// The generator and the derived-stream rule below are part of the golden
/// output contract: changing either changes every seeded scenario and every
/// SeededRandom block. Do not swap it for a std:: engine or distribution,
/// those are not bit-reproducible across standard libraries.
class SplitMix64 {
 public:
  static constexpr const char* kVersion = "splitmix64-v1";

  constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  /// Independent stream keyed by (seed, stream index), e.g. one per block.
  static constexpr SplitMix64 derive(std::uint64_t seed, std::uint64_t stream) noexcept {
    SplitMix64 mixer(stream ^ 0x6A09E667F3BCC909ULL);
    return SplitMix64(seed ^ mixer.next());
  }

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi], unbiased (rejection on the top partial range).
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept {
    const std::uint64_t span = hi - lo;
    if (span == std::numeric_limits<std::uint64_t>::max()) return next();
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return lo + x % range;
  }

  /// exp(U(ln lo, ln hi)).
  double log_uniform(double lo, double hi) noexcept {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

 private:
  std::uint64_t state_;
};

}  // namespace feemarket

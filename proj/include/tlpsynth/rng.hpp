#pragma once

#include <cstdint>

namespace tlpsynth {

/// SplitMix64 (Steele, Lea, Flood). Chosen because the stream is fully
/// specified by the seed and identical on every platform; the C++ standard
/// distributions are not. Bounded draws use the multiply-high reduction and
/// consume exactly one raw draw each, so derived streams stay aligned.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, n); n must be nonzero.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  /// Uniform in [lo, hi], inclusive.
  std::uint32_t uniform_int(std::uint32_t lo, std::uint32_t hi) {
    return lo + static_cast<std::uint32_t>(bounded(std::uint64_t(hi) - lo + 1));
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace tlpsynth

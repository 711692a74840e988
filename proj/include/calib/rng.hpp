// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace calib {

/// splitmix64: a tiny, platform-stable 64-bit generator. Dataset generation
/// depends on bit-identical streams across platforms, which rules out the
/// standard library distributions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + uniform01() * (hi - lo);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }

 private:
  std::uint64_t state_;
};

/// Independent stream for (seed, index). Streams are decorrelated by
/// hashing the pair, so adjacent indices do not overlap.
inline SplitMix64 makeStream(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 mixer(seed ^ (0x632BE59BD9B4E019ULL * (index + 1)));
  return SplitMix64(mixer.next());
}

}  // namespace calib

#pragma once

#include <cstdint>
#include <initializer_list>

namespace roughcount {

/// SplitMix64 (Steele, Lea & Flood 2014). The output sequence for a seed is
/// fixed by the algorithm, and the integer/real helpers below avoid the
/// implementation-defined std:: distributions, so draws are identical on
/// every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] (inclusive), unbiased by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;

  /// Standard normal via Box-Muller; no cached second variate.
  double normal() noexcept;

 private:
  std::uint64_t state_;
};

/// Mixes a base seed with a list of stream indices into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> streams) noexcept;

}  // namespace roughcount

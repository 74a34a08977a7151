#include "roughcount/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace roughcount {

std::int64_t SplitMix64::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
  if (hi <= lo) return lo;
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  if (range == 0) return static_cast<std::int64_t>(next());  // full 64-bit span
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return lo + static_cast<std::int64_t>(x % range);
}

double SplitMix64::normal() noexcept {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> streams) noexcept {
  SplitMix64 mix(base);
  std::uint64_t seed = mix.next();
  for (std::uint64_t s : streams) {
    SplitMix64 step(seed ^ (s * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    seed = step.next();
  }
  return seed;
}

}  // namespace roughcount

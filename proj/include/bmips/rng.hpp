#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace bmips {

/// SplitMix64 finalizer, used to derive well-separated stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic pseudo-random stream for the samplers.
///
/// Per-query streams are derived from a master seed and the query ordinal, so
/// a batch produces the same draws whatever the thread schedule.
class SamplerRng {
 public:
  explicit SamplerRng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  /// Stream for query number `ordinal` under master seed `seed`.
  static SamplerRng for_query(std::uint64_t seed, std::uint64_t ordinal) {
    return SamplerRng(mix64(seed ^ mix64(ordinal + 0x51ed270b27a3c3d5ULL)));
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next() noexcept { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint32_t below(std::uint32_t bound) noexcept {
    // Lemire's multiply-shift with rejection.
    std::uint64_t x = engine_() >> 32;
    std::uint64_t m = x * bound;
    auto low = static_cast<std::uint32_t>(m);
    if (low < bound) {
      const std::uint32_t threshold = static_cast<std::uint32_t>(-bound) % bound;
      while (low < threshold) {
        x = engine_() >> 32;
        m = x * bound;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace bmips

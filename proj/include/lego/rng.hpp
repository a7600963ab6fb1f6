#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace lego {

/// SplitMix64 finalizer. Used to derive independent sub-stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the sub-stream `index` under `seed`: mix64(mix64(seed) ^ index).
/// Stable across platforms; every per-sentence stream is derived this way.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed) ^ index);
}

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distribution helpers are implemented here instead of using
/// <random> distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n). Unbiased (rejection on the low product bits).
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t x = engine_();
      const unsigned __int128 prod = static_cast<unsigned __int128>(x) * n;
      if (static_cast<std::uint64_t>(prod) >= threshold) {
        return static_cast<std::uint64_t>(prod >> 64);
      }
    }
  }

  int uniform_int(int n) { return static_cast<int>(uniform_below(static_cast<std::uint64_t>(n))); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one output per call).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Child stream for sub-task `index`, derived from a fresh draw.
  Rng fork(std::uint64_t index) { return Rng(derive_seed(engine_(), index)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lego

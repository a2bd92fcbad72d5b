#pragma once

#include <cstdint>
#include <limits>

namespace dxt {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

/// Independent child seed for stream `index` under `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index + 0x9e3779b97f4a7c15ULL));
}

/**
 * Counter-based generator: output k is a pure function of (key, k).
 *
 * Every stochastic step in the library draws from a `CounterRng` keyed by
 * `derive_seed(seed, item_index)`, so results do not depend on which thread
 * processes which item. The distributions below are implemented here rather
 * than through <random> so the bit streams are identical across standard
 * library implementations.
 */
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Standard normal via Box-Muller (one value per call, the pair's twin is dropped).
  double normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dxt

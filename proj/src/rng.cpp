#include "dxt/rng.hpp"

#include <cmath>
#include <numbers>

namespace dxt {

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  const std::uint64_t limit = max() - max() % bound;
  for (;;) {
    const std::uint64_t r = (*this)();
    if (r < limit) return r % bound;
  }
}

double CounterRng::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dxt

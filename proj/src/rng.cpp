#include "kolpinn/rng.hpp"

#include <cmath>
#include <numbers>

namespace kolpinn {

double normal(std::uint64_t seed, std::uint64_t c0, std::uint64_t c1,
              std::uint64_t c2, std::uint64_t c3) {
  // Two independent words from disjoint sub-streams of the counter space.
  const std::uint64_t h1 = counter_hash(seed, c0, c1, c2, 2 * c3);
  const std::uint64_t h2 = counter_hash(seed, c0, c1, c2, 2 * c3 + 1);
  const double u1 = u64_to_open_unit(h1);
  const double u2 = u64_to_open_unit(h2);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace kolpinn

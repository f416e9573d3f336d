#pragma once

#include <cstdint>

namespace kolpinn {

// Counter-based random number generation. Every draw is a pure function of
// (seed, stream, counter indices), so parallel producers get identical
// numbers regardless of scheduling.

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Mixes up to four counter words with a seed into one 64-bit word.
inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t c0,
                                  std::uint64_t c1 = 0, std::uint64_t c2 = 0,
                                  std::uint64_t c3 = 0) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ c0);
  h = detail::splitmix64(h ^ c1);
  h = detail::splitmix64(h ^ c2);
  h = detail::splitmix64(h ^ c3);
  return h;
}

// Uniform double in the open interval (0, 1).
inline double u64_to_open_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

inline double uniform01(std::uint64_t seed, std::uint64_t c0,
                        std::uint64_t c1 = 0, std::uint64_t c2 = 0,
                        std::uint64_t c3 = 0) {
  return u64_to_open_unit(counter_hash(seed, c0, c1, c2, c3));
}

inline double uniform(double lo, double hi, std::uint64_t seed,
                      std::uint64_t c0, std::uint64_t c1 = 0,
                      std::uint64_t c2 = 0, std::uint64_t c3 = 0) {
  return lo + (hi - lo) * uniform01(seed, c0, c1, c2, c3);
}

// Standard normal via Box-Muller on two decorrelated counter words.
double normal(std::uint64_t seed, std::uint64_t c0, std::uint64_t c1 = 0,
              std::uint64_t c2 = 0, std::uint64_t c3 = 0);

}  // namespace kolpinn

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace plastic_replay {

using Rng = std::mt19937_64;

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

/// Seed for one named random stream of a run.
///
/// seed = splitmix64(splitmix64(run_seed ^ fnv1a64(component)) + index).
/// Every stochastic component of a run draws from its own stream so that
/// adding draws in one place never perturbs another.
inline constexpr std::uint64_t derive_seed(std::uint64_t run_seed,
                                           std::string_view component,
                                           std::uint64_t index = 0) {
  return detail::splitmix64(
      detail::splitmix64(run_seed ^ detail::fnv1a64(component)) + index);
}

inline Rng make_rng(std::uint64_t run_seed, std::string_view component,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(run_seed, component, index));
}

// Uniform double in [0, 1) from the top 53 bits of one engine call.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace plastic_replay

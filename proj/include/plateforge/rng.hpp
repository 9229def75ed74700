// Deterministic random number helpers.
//
// std::uniform_real_distribution is implementation-defined, so uniform draws
// are mapped from raw engine output here. Results are reproducible from the
// recorded seeds on any conforming platform.
#pragma once

#include <cstdint>
#include <random>

namespace plateforge {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Per-trajectory seed derived from the master seed and the trajectory index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master;
  (void)splitmix64(s);
  s ^= 0x517cc1b727220a95ull * (index + 1);
  return splitmix64(s);
}

// Uniform double in [0, 1) using the top 53 bits of the engine output.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace plateforge

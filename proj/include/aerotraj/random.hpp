#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace aerotraj {

/// Engine used everywhere randomness is needed. Its output sequence is fixed
/// by the standard, so seeded runs are reproducible.
using RandomEngine = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed from a master seed and a path of
/// indices, e.g. derive_seed(master, {scene, trial}).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t v : path) s = mix64(s ^ mix64(v + 0x632be59bd9b4e019ULL));
  return s;
}

inline RandomEngine make_engine(std::uint64_t seed) { return RandomEngine(seed); }

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(RandomEngine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(RandomEngine& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform integer in [0, n) by rejection (unbiased).
inline std::uint64_t uniform_index(RandomEngine& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

/// Standard normal via Box-Muller; consumes two draws.
double standard_normal(RandomEngine& rng);

}  // namespace aerotraj

#pragma once

// Deterministic random streams. Every (instance, group, round) triple gets its
// own generator derived from the master seed, so results do not depend on the
// order in which workers pick up instances.

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace rclicks {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline Rng stream_rng(std::uint64_t master_seed, std::string_view instance, std::uint64_t group,
                      std::uint64_t round) {
  std::uint64_t key = splitmix64(master_seed);
  key = splitmix64(key ^ fnv1a(instance));
  key = splitmix64(key ^ (group * 0xD1B54A32D192ED03ULL));
  key = splitmix64(key ^ (round * 0x8CB92BA72F3D8DD7ULL));
  return Rng(key);
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

}  // namespace rclicks

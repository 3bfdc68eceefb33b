#ifndef MFCHAIN_RANDOM_HPP
#define MFCHAIN_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace mfchain {

/// mt19937_64 is fully specified by the standard, so streams are identical
/// across platforms.  The conversions below are hand-written for the same
/// reason: std:: distributions are implementation-defined.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of replication r under a master seed:
///   splitmix64(splitmix64(master) ^ (r * 0xD1B54A32D192ED03))
/// Counter-based, so any replication can be regenerated on its own.
constexpr std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r) {
  return splitmix64(splitmix64(master) ^ (r * 0xD1B54A32D192ED03ULL));
}

/// Uniform on [0,1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Exponential waiting time with the given rate (> 0).
inline double exponential(Rng& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace mfchain

#endif  // MFCHAIN_RANDOM_HPP

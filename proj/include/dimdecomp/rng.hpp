#pragma once

#include <cstdint>

namespace dimdecomp::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: a pure function of (seed, stream, counter).
constexpr std::uint64_t bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return mix64(mix64(mix64(seed) ^ stream) ^ counter);
}

/// Uniform on the open interval (0, 1) with 53 random bits.
constexpr double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  return (static_cast<double>(bits(seed, stream, counter) >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace dimdecomp::rng

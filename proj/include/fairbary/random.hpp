#pragma once

// Portable draws: the standard distributions are implementation-defined, so
// uniforms are built directly from the engine's bits.

#include <cstdint>
#include <random>

namespace fairbary {

using Rng = std::mt19937_64;

/// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform index in [0, n), by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % n;
}

/// Standard normal draw by inversion.
double standard_normal(Rng& rng);

}  // namespace fairbary

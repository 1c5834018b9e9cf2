#pragma once

// Portable random draws on top of std::mt19937_64.
//
// The standard distribution classes are implementation-defined, so seeded
// runs would differ between standard libraries. Everything here consumes raw
// 64-bit engine output only, which the standard pins down exactly.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace fleetlab {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Rejection keeps the draw unbiased for any n.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// Poisson draw by multiplication (Knuth). Large rates are split into
/// chunks, using additivity, so exp(-rate) never underflows.
inline std::int64_t poisson(Rng& rng, double rate) {
  if (!(rate > 0.0)) return 0;
  constexpr double kChunk = 256.0;
  std::int64_t total = 0;
  while (rate > 0.0) {
    const double piece = rate > kChunk ? kChunk : rate;
    rate -= piece;
    const double floor_p = std::exp(-piece);
    double prod = uniform01(rng);
    std::int64_t k = 0;
    while (prod > floor_p) {
      ++k;
      prod *= uniform01(rng);
    }
    total += k;
  }
  return total;
}

/// Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Derives an independent stream seed from a master seed and a tag
/// (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace fleetlab

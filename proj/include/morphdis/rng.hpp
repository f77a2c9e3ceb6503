#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace morphdis {

// Engine output is fully specified by the standard; the helpers below avoid
// the implementation-defined std distributions so seeded runs match across
// standard libraries.
using Rng = std::mt19937_64;

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_symmetric(Rng& rng, double r) {
  return (2.0 * uniform01(rng) - 1.0) * r;
}

// Uniform on [0, n), n > 0; rejection sampling removes modulo bias.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

template <typename Vec>
void shuffle(Vec& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace morphdis

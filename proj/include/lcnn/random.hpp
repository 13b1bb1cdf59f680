#pragma once

// Distribution helpers over raw mt19937_64 output. The standard
// distributions are implementation-defined; these are not, so seeded runs
// reproduce across toolchains.

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace lcnn {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [0, n).
inline std::size_t below(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[below(rng, i)]);
  }
}

}  // namespace lcnn

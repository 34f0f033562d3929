// Copyright (c) 2026 Fracprox Contributors
// Licensed under Apache 2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fracprox {

/// splitmix64 finalizer; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(a ^ mix_seed(b));
}

/// Deterministic generator used everywhere randomness is needed. Doubles are
/// built from the top 53 bits of mt19937_64 output, so streams depend only on
/// the seed, not on library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on [-1, 1).
  double uniform_symmetric() { return 2.0 * uniform() - 1.0; }

  /// Fair coin as +1.0 / -1.0.
  double sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  /// Unbiased integer in [0, bound).
  std::uint64_t uniform_int(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::uniform_int: bound must be > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % bound;
  }

  /// `count` distinct values from {0,...,range-1}, sorted ascending.
  /// Partial Fisher-Yates, so the draw is uniform over subsets.
  std::vector<Eigen::Index> sample_sorted_distinct(Eigen::Index range, Eigen::Index count) {
    if (count < 0 || count > range) {
      throw std::invalid_argument("Rng::sample_sorted_distinct: need 0 <= count <= range");
    }
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(range));
    for (Eigen::Index i = 0; i < range; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto j = i + static_cast<Eigen::Index>(uniform_int(static_cast<std::uint64_t>(range - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(count));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fracprox

// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace forge {

// std::uniform_int_distribution and std::shuffle are implementation-defined,
// so seeded shuffles go through these to stay identical across toolchains.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  // Rejection sampling on the top of the range; bound must be > 0.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void seeded_shuffle(std::span<T> items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace forge

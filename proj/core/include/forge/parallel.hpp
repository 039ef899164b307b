// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace forge {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is handed out in
// blocks; callers write results by index so output order never depends on
// scheduling. The first exception thrown by any worker is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn, std::size_t block = 64) {
  if (n == 0) return;
  workers = std::max(1u, workers);
  if (workers == 1 || n <= block) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&] {
    try {
      for (;;) {
        const std::size_t start = next.fetch_add(block);
        if (start >= n) break;
        const std::size_t stop = std::min(n, start + block);
        for (std::size_t i = start; i < stop; ++i) fn(i);
      }
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
      next.store(n);
    }
  };
  const auto count = std::min<std::size_t>(workers, (n + block - 1) / block);
  {
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(run);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace forge

#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace cspace {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i, tid) for every i in [0, n), split into contiguous chunks.
// Callers must not let results depend on the chunking: writes go to
// per-index (or per-tid) slots and any reduction happens afterwards in
// index order.
template <typename Fn>
void parallel_for(std::int64_t n, int threads, Fn&& fn) {
  threads = resolve_threads(threads);
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  const int t = static_cast<int>(std::min<std::int64_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int tid = 0; tid < t; ++tid) {
    const std::int64_t lo = n * tid / t;
    const std::int64_t hi = n * (tid + 1) / t;
    pool.emplace_back([lo, hi, tid, &fn] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i, tid);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace cspace

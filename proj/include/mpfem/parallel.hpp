#pragma once

// Deterministic chunked parallel-for. Worker count is capped by the
// MFEM_THREADS environment variable (default: hardware concurrency); results
// never depend on the worker count because chunks write disjoint outputs.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mpfem {

inline std::atomic<int>& max_threads_slot() {
  static std::atomic<int> n{0};
  return n;
}

inline void set_max_threads(int n) { max_threads_slot().store(n); }

inline int max_threads() {
  int n = max_threads_slot().load();
  if (n > 0) return n;
  if (const char* env = std::getenv("MFEM_THREADS")) {
    int e = std::atoi(env);
    if (e > 0) return e;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

/// Runs fn(begin, end) over a partition of [0, n).
template <class F>
void parallel_for(int n, F&& fn) {
  int workers = std::min(max_threads(), std::max(1, n));
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int b = w * chunk;
    int e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mpfem

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace tgc {

namespace detail {
inline std::atomic<std::size_t>& thread_cap() {
  static std::atomic<std::size_t> cap{1};
  return cap;
}
}  // namespace detail

inline void set_num_threads(std::size_t n) { detail::thread_cap() = std::max<std::size_t>(1, n); }
inline std::size_t num_threads() { return detail::thread_cap(); }

/// Reads TGC_THREADS; unset or malformed leaves the cap at 1.
inline void configure_threads_from_env() {
  if (const char* env = std::getenv("TGC_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) set_num_threads(static_cast<std::size_t>(v));
    } catch (...) {
    }
  }
}

/// Runs fn(i) for i in [0, n). Callers must only write disjoint outputs per i;
/// the result is then independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(num_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (std::size_t i = 0; i < std::min(n, chunk); ++i) fn(i);
  for (auto& t : pool) t.join();
}

}  // namespace tgc

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ratingxva {

namespace detail {
inline std::atomic<unsigned>& thread_count_slot() {
  static std::atomic<unsigned> count{1};
  return count;
}
}  // namespace detail

/// Number of worker threads used by the Monte Carlo loops. Affects speed only:
/// every loop writes results by index, so outputs never depend on this value.
inline unsigned thread_count() { return detail::thread_count_slot().load(); }
inline void set_thread_count(unsigned n) { detail::thread_count_slot().store(std::max(1u, n)); }

/// Runs body(i) for i in [0, n) on up to thread_count() threads, in contiguous chunks.
/// The first exception thrown by any worker is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ratingxva

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace floqscat {

/// Worker count: FLOQSCAT_THREADS if set and positive, else hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; results
/// must be written to index-addressed storage so merging stays deterministic.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename Body>
void parallel_for(std::ptrdiff_t n, Body&& body) {
  const int workers = static_cast<int>(std::min<std::ptrdiff_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::ptrdiff_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace floqscat

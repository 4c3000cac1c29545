#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace specshare {

// Runs body(i) for i in [0, n) across OpenMP threads. Exceptions cannot cross
// the parallel region, so the first one is captured and rethrown afterwards.
template <class F>
void parallel_for(std::size_t n, F&& body) {
  std::exception_ptr failure;
  std::mutex m;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(m);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace specshare

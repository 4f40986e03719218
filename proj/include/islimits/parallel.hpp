#pragma once

#include <cstdint>

#include <omp.h>

namespace islimits::parallel {

/// Number of threads to use for `requested` (<= 0 means the OpenMP default).
int resolve_threads(int requested);

/// Index loop distributed over OpenMP threads. `fn(i)` must only write state
/// owned by index i; results then do not depend on the thread count.
template <typename Fn>
void for_each_index(std::int64_t n, int threads, Fn&& fn) {
  const int nt = resolve_threads(threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

/// Serial reference for for_each_index.
template <typename Fn>
void for_each_index_serial(std::int64_t n, Fn&& fn) {
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace islimits::parallel

#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace alab {

// Worker-thread cap: ANALOGYLAB_THREADS if set (>= 1), otherwise the
// hardware concurrency.
std::size_t default_thread_count();

// Runs fn(i) for i in [0, n) on up to n_threads workers over fixed
// contiguous ranges. Callers must write results into per-index slots;
// aggregation stays single-threaded so output order never depends on the
// thread count. n_threads == 0 means default_thread_count(). The first
// exception thrown by a worker is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t n_threads, const std::function<void(std::size_t)>& fn);

}  // namespace alab

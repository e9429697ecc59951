#pragma once

#include <cstddef>
#include <functional>

namespace omx2d {

/// OMX2D_WORKERS if set to a positive integer, else the hardware concurrency.
int default_worker_count();

/// Calls body(i) for i in [0, n) on up to `workers` threads.
///
/// Work is handed out one index at a time; callers write into pre-sized
/// storage at index i, so results never depend on scheduling. If bodies
/// throw, the exception of the lowest failing index is rethrown after all
/// threads have joined.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace omx2d

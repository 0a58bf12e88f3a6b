#pragma once

#include <cstddef>
#include <functional>

namespace lsm {

/// Worker count: LSM_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Calls body(i) for i in [0, n) over worker_count() threads in contiguous
/// chunks. Each index is visited exactly once; body must only write state
/// owned by its index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lsm

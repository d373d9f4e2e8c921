#pragma once

#include <cstddef>
#include <functional>

namespace gmethods {

// Worker count: GMETHODS_THREADS if set and positive, else the hardware
// concurrency (at least 1).
int worker_count();

// Runs body(0..count-1) on up to `threads` workers. Each index runs exactly
// once; the first exception thrown by any body is rethrown after all workers
// stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, int threads = worker_count());

}  // namespace gmethods

#pragma once

#include <cstdint>
#include <functional>

namespace hardylab {

// Worker count from HARDYLAB_THREADS, else the hardware concurrency. At least 1.
int worker_count();

// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index is
// visited exactly once; callers write results by index so the outcome does not
// depend on scheduling. The first exception thrown by fn is rethrown.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace hardylab

#pragma once

#include <cstddef>
#include <functional>

namespace manifold_dp {

// Worker count from MANIFOLD_DP_THREADS, falling back to the hardware
// concurrency (at least 1).
int worker_count();

// Runs body(i) for i in [0, n) on up to `workers` threads. Tasks are claimed
// dynamically; callers keep results deterministic by writing into slot i and
// reducing in index order afterwards. After a task throws, no new tasks
// start; the exception with the lowest index among tasks that ran is
// rethrown once all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int workers = worker_count());

}  // namespace manifold_dp

#pragma once

#include <functional>

namespace rosguard {

/// Worker-pool width: hardware concurrency capped by the ROSGUARD_THREADS
/// environment variable (minimum 1).
int worker_count();

/// Runs fn(0..n-1) across the pool. Each index owns its output slot, so the
/// result is independent of scheduling.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace rosguard

#pragma once

#include <cstddef>
#include <functional>

namespace convaug {

/// Worker count: CONVAUG_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n) on a bounded pool. Each index is handled by
/// exactly one worker, so writing results into slot i keeps the merge
/// deterministic. The first exception (lowest index) is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace convaug

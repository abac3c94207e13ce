#pragma once

#include <functional>

namespace sls {

/// Worker count: SLS_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int thread_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunks write
/// disjoint output so results never depend on scheduling.
void parallel_for(int n, const std::function<void(int, int)>& body);

}  // namespace sls

#pragma once

#include <cstddef>
#include <functional>

namespace fbsde {

/// Worker cap: FBSDE_NS_THREADS if set and positive, else hardware concurrency.
int worker_threads();

/**
 * Runs body(begin, end) over a fixed partition of [0, count) into `chunks`
 * contiguous ranges. The partition does not depend on the thread count, so any
 * per-range computation is reproducible under every scheduling.
 */
void parallel_for(std::size_t count, std::size_t chunks,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Fixed-order pairwise sum.
double pairwise_sum(const double* x, std::size_t n);

} // namespace fbsde

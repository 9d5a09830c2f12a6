#pragma once

#include <cstddef>
#include <functional>

namespace hill {

/// Number of workers used by default: the HILLBAND_WORKERS environment
/// variable when set (>= 1), otherwise the machine's hardware concurrency.
int default_workers();

/// Run body(i) for i in [0, n) on a pool of `workers` threads.  Results must
/// be written to disjoint, index-addressed storage; iteration order within a
/// worker is ascending, work is handed out in fixed-size chunks, and any
/// reduction over the results must be performed by the caller in index order
/// afterwards, so numerical output never depends on the worker count.
/// Exceptions thrown by the body are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int workers = 0);

} // namespace hill

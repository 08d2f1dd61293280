#pragma once

#include <cstddef>
#include <functional>

namespace krnet {

// Worker count used by parallel_for. Defaults to the hardware concurrency,
// overridable by the KRNET_THREADS environment variable; set_num_threads wins
// over both. Not safe to call while a parallel_for is in flight.
int num_threads();
void set_num_threads(int n);

// Runs body(begin, end) over a partition of [0, count) into contiguous ranges,
// one per worker. Each index is visited exactly once by exactly one worker, so
// any computation whose per-index work is self-contained produces bit-identical
// results for every worker count, including the serial path.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace krnet

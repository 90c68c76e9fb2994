#pragma once

#include <cstddef>
#include <functional>

namespace excon {

// Number of worker threads: EXCON_THREADS env var caps it, 0 or unset = auto.
std::size_t worker_count(std::size_t n_items);

// Runs fn(i) for i in [0,n). Each index writes only its own output slot, so
// results are identical to the sequential order regardless of thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace excon

#pragma once

#include <cstddef>
#include <functional>

namespace settler {

/// Number of worker threads: $SETTLER_THREADS if set, else hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index writes only its own output slot,
/// so results do not depend on the thread count. The first exception thrown
/// by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace settler

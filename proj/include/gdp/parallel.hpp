#pragma once

#include <cstddef>
#include <functional>

namespace gdp {

/// Worker count from GDP_THREADS, else hardware_concurrency (at least 1).
std::size_t default_thread_count();

/// Calls fn(i) for i in [0, count) on up to `threads` workers. Indices are
/// handed out dynamically; callers write results into per-index slots so the
/// output does not depend on scheduling. The first exception thrown by any
/// task is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

} // namespace gdp

#pragma once

// Minimal task pool: workers pull indices from a shared counter, so uneven
// task costs balance themselves. Results go to caller-owned slots by index,
// which keeps merged output independent of scheduling.

#include <cstddef>
#include <functional>

namespace sirlab {

/// Number of workers to use for `requested` (0 = hardware concurrency, at least 1).
unsigned resolve_threads(unsigned requested);

/// Runs fn(0) .. fn(count - 1) on up to `threads` workers. The first exception
/// thrown (lowest index among those observed) is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace sirlab

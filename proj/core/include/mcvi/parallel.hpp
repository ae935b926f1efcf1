#pragma once

#include <cstddef>
#include <functional>

namespace mcvi {

/// Number of worker threads to use when the caller passes 0.
unsigned default_thread_count();

/// Runs fn(i) for i in [0, n) on up to `threads` threads (0 = all cores).
///
/// Work is split into contiguous chunks; callers write results into slot i so
/// output never depends on scheduling. Nested calls run serially. The first
/// exception thrown by any task is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace mcvi

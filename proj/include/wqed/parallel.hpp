#pragma once

#include <cstddef>
#include <functional>

namespace wqed {

/// Worker count used when a call passes threads = 0. Initialised from
/// WQED_THREADS, else hardware concurrency.
unsigned default_threads();
void set_default_threads(unsigned n);

/// Runs body(i) for i in [0, n) on up to `threads` workers with dynamic
/// scheduling. Exceptions from workers are rethrown (first index wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0);

} // namespace wqed

#pragma once

#include <cstddef>
#include <functional>

namespace spcdist {

/// 0 means "use std::thread::hardware_concurrency()", never less than 1.
unsigned resolve_threads(unsigned requested);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index must
/// write only to its own output slots. If bodies throw, the exception from the
/// lowest failing index is rethrown after all workers stop, so the reported
/// failure does not depend on scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace spcdist

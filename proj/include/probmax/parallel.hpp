#pragma once

#include <cstddef>
#include <functional>

namespace probmax {

/// Runs `body(i)` for every i in [0, count). Work is spread over worker
/// threads when more than one is available; calls made from inside a worker
/// run inline so nested regions never oversubscribe. Callers own result
/// slots per index and reduce them in index order, so results do not depend
/// on scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// 0 restores the default (hardware concurrency).
void set_max_threads(unsigned threads);
unsigned max_threads();

}  // namespace probmax

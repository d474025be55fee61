#pragma once

#include <cstddef>
#include <functional>

namespace dhom {

// Worker count: DRIFT_HOMOG_WORKERS if set (min 1), else hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n). Results must go into preassigned slots so the
// schedule cannot affect output; fn must not throw across threads (exceptions
// are captured and rethrown after the join).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dhom

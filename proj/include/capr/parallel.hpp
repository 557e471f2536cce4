#pragma once

#include <cstddef>
#include <functional>

namespace capr {

// Runs fn(0..n-1) on up to `workers` threads. Callers write results by index,
// so output does not depend on scheduling. The first exception (lowest index)
// is rethrown after all workers finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace capr

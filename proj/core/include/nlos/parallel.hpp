#pragma once

#include <cstddef>
#include <functional>

namespace nlos {

/// Runs fn(0) .. fn(n-1) on up to `threads` workers (0 = hardware
/// concurrency). Each index runs exactly once; callers write results into
/// per-index slots so the outcome is independent of scheduling. The first
/// exception (by index) is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t threads = 0);

}  // namespace nlos

#pragma once

#include <cstddef>
#include <functional>

namespace lsh {

/// Runs body(i) for i in [0, count), split into contiguous chunks over the
/// available hardware threads. Falls back to a serial loop below
/// `min_parallel`. The body must only write to slots owned by index i.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t min_parallel = 4096);

/// Worker count used by parallel_for (at least 1).
std::size_t worker_count();

}  // namespace lsh

#pragma once

#include <cstddef>
#include <functional>

namespace flexsc {

/// Runs fn(0..n-1) on up to `workers` threads. Every index is visited exactly
/// once; the first exception (lowest index) is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace flexsc

#pragma once

#include <cstddef>
#include <functional>

namespace nilgeo {

// Worker count: NILGEO_THREADS if set, otherwise hardware concurrency.
int thread_count();

// Runs body(i) for i in [0, n). Each index is handled exactly once; results go to caller-owned slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace nilgeo

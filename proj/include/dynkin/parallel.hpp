#pragma once

#include <cstddef>
#include <functional>

namespace dynkin {

// DYNKIN_THREADS if set to a positive integer, else hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, n) on up to worker_count() threads. Each index
// is processed exactly once; the first exception is rethrown.
void parallel_for(size_t n, const std::function<void(size_t)>& body);

}  // namespace dynkin

#pragma once

#include <cstddef>
#include <functional>

namespace katolab {

// Number of worker threads used by parallel_for. Defaults to 1.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Callers write results into per-index slots and
// reduce sequentially afterwards, so output never depends on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace katolab

#pragma once

#include <functional>

namespace mockshade {

/// Worker count used by per-row kernels. Defaults to MOCKSHADE_THREADS, then
/// the hardware concurrency.
int thread_count();
void set_thread_count(int threads);

/// Runs fn(y) for every y in [0, rows). Rows are split into contiguous bands,
/// one per worker; fn must only write state owned by row y.
void parallel_rows(int rows, const std::function<void(int)>& fn);

}  // namespace mockshade

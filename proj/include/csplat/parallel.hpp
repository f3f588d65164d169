#pragma once

#include <cstddef>
#include <functional>

namespace csplat {

/// Number of worker threads. Defaults to hardware concurrency, overridable
/// with the CSPLAT_THREADS environment variable or set_thread_count().
int thread_count();
void set_thread_count(int n);

/// Runs f(i) for i in [0, n). Work is split into fixed-size chunks whose
/// boundaries do not depend on the thread count, and each index writes only
/// its own outputs, so results are bit-identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

/// Runs f(c) for chunk index c in [0, n_chunks). Chunk granularity is the
/// caller's (e.g. one image tile per chunk).
void parallel_chunks(std::size_t n_chunks,
                     const std::function<void(std::size_t)>& f);

} // namespace csplat

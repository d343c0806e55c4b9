#pragma once

#include <cstddef>
#include <functional>

namespace dcfg {

/// Worker cap, read once from DCFG_THREADS (default: hardware concurrency,
/// at least 1).
int worker_count();

/// Runs f(begin, end) over [0, n) split into contiguous chunks, one chunk per
/// worker, joining before return. Chunking is static so position-indexed
/// outputs are reproducible; callers must not reduce across chunks in thread
/// completion order. Runs serially when one worker suffices.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& f);

}  // namespace dcfg

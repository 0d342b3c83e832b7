#pragma once

#include <cstdint>
#include <functional>

namespace scanet {

// Intra-op worker count: hardware concurrency capped by the SCANET_THREADS
// environment variable (read once) and by set_max_threads(). Always >= 1.
int max_threads();
void set_max_threads(int n);

// Runs fn(begin, end) over [0, count) split into contiguous chunks, one per
// worker. Work per index must be independent; per-element arithmetic order
// inside fn is untouched, so splitting never changes results.
void parallel_for(long long count, const std::function<void(long long, long long)>& fn);

}  // namespace scanet

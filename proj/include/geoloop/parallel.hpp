#pragma once

#include <functional>

namespace geoloop {

// Runs fn(i) for i in [begin, end), split into contiguous chunks across up to
// `threads` workers (0 or 1 = run inline). Chunking is deterministic; callers
// must only write to disjoint outputs per index.
void parallel_for(int begin, int end, int threads,
                  const std::function<void(int)>& fn);

}  // namespace geoloop

// Deterministic data parallelism: workers pull fixed-size chunks, every
// chunk writes a disjoint output range, so results never depend on the
// thread count. The cap is set once by the CLI --threads flag.
#pragma once

#include <cstddef>
#include <functional>

namespace warpfield {

void set_thread_cap(int threads);  // <=1 forces serial execution
int thread_cap();

// Calls fn(begin, end) over disjoint chunks of [0, n).
void parallel_chunks(size_t n, size_t chunk, const std::function<void(size_t, size_t)>& fn);

}  // namespace warpfield

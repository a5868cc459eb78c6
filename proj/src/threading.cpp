#include "warpfield/threading.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace warpfield {

namespace {
int g_thread_cap = static_cast<int>(std::thread::hardware_concurrency());
}

void set_thread_cap(int threads) { g_thread_cap = threads < 1 ? 1 : threads; }

int thread_cap() { return g_thread_cap < 1 ? 1 : g_thread_cap; }

void parallel_chunks(size_t n, size_t chunk, const std::function<void(size_t, size_t)>& fn) {
    if (n == 0) return;
    if (chunk == 0) chunk = 1;
    const size_t n_chunks = (n + chunk - 1) / chunk;
    const int workers = std::min<size_t>(thread_cap(), n_chunks);
    if (workers <= 1) {
        for (size_t c = 0; c < n_chunks; ++c)
            fn(c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            fn(c * chunk, std::min(n, (c + 1) * chunk));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

}  // namespace warpfield

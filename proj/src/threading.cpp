#include "scanet/threading.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace scanet {

namespace {

int env_default() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    if (const char* s = std::getenv("SCANET_THREADS")) {
        const int cap = std::atoi(s);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

std::atomic<int> g_max_threads{0};  // 0 = not initialized yet

}  // namespace

int max_threads() {
    int n = g_max_threads.load(std::memory_order_relaxed);
    if (n == 0) {
        n = env_default();
        g_max_threads.store(n, std::memory_order_relaxed);
    }
    return n;
}

void set_max_threads(int n) { g_max_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed); }

void parallel_for(long long count, const std::function<void(long long, long long)>& fn) {
    if (count <= 0) return;
    const int workers = static_cast<int>(std::min<long long>(max_threads(), count));
    if (workers <= 1 || count < 256) {
        fn(0, count);
        return;
    }
    const long long chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) {
        const long long b = t * chunk;
        const long long e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(0, std::min(count, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace scanet

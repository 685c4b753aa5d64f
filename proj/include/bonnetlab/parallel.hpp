#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace bonnetlab {

// Worker cap: hardware concurrency, optionally capped by BONNETLAB_THREADS.
// Parallelism is only ever used for node-disjoint map steps (stencils,
// Jacobian colors); every reduction in the library stays serial so reported
// norms are bit-identical regardless of the thread count.
inline int worker_count() {
    static const int cached = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
        if (const char* env = std::getenv("BONNETLAB_THREADS")) {
            char* end = nullptr;
            long cap = std::strtol(env, &end, 10);
            if (end != env && cap >= 1) n = std::min<long>(n, cap);
        }
        return n;
    }();
    return cached;
}

// Applies fn(i) for i in [0, count) using contiguous per-thread chunks.
// fn must not throw and must write only to indices it owns.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const int workers = worker_count();
    if (workers <= 1 || count < 256) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t chunks = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    const std::size_t step = (count + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t lo = c * step;
        const std::size_t hi = std::min(count, lo + step);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace bonnetlab

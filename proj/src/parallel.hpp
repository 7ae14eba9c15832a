#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace gsplan {

/// Worker cap: GSPLAN_THREADS when set, else hardware concurrency.
inline int thread_budget() {
    if (const char* env = std::getenv("GSPLAN_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Splits [0, n) into contiguous chunks, one per worker. The chunks are
/// disjoint, so determinism is the caller's concern only where results merge.
inline void parallel_for_chunks(size_t n, const std::function<void(size_t, size_t)>& body) {
    const int workers = std::min<size_t>(thread_budget(), n == 0 ? 1 : n);
    if (workers <= 1 || n < 2) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const size_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const size_t begin = w * chunk;
        const size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(body, begin, end);
    }
    for (auto& t : pool) t.join();
}

}  // namespace gsplan

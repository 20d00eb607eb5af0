#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace potlab {

inline int default_jobs() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

/// Splits [begin, end) into contiguous chunks, one worker thread per chunk.
/// Workers share no mutable state; results land in disjoint ranges.
template <typename Fn>
void parallel_for(long begin, long end, Fn&& body, int jobs = 0) {
    if (jobs <= 0) jobs = default_jobs();
    const long n = end - begin;
    if (n <= 0) return;
    if (jobs == 1 || n < 4096) {
        for (long i = begin; i < end; ++i) body(i);
        return;
    }
    jobs = static_cast<int>(std::min<long>(jobs, n));
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    const long chunk = (n + jobs - 1) / jobs;
    for (int t = 0; t < jobs; ++t) {
        const long lo = begin + t * chunk;
        const long hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (long i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace potlab

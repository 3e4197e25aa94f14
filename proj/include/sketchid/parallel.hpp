#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace sketchid {

// Static contiguous partition of [0, n) over `threads` workers. Work items are
// assigned by index range, never by scheduling order, so any reduction that
// merges per-range results in range order is reproducible for a fixed thread
// count (and bitwise so for threads == 1).
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    if (threads < 1) threads = 1;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (workers == 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& t : pool) t.join();
}

// As parallel_for but hands the body its chunk index so callers can keep
// per-chunk accumulators and merge them in chunk order. Returns the number of
// chunks dispatched.
inline int parallel_for_chunks(std::size_t n, int threads,
                               const std::function<void(int, std::size_t, std::size_t)>& body) {
    if (n == 0) return 0;
    if (threads < 1) threads = 1;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    const std::size_t chunk = (n + workers - 1) / workers;
    if (workers == 1) {
        body(0, 0, n);
        return 1;
    }
    std::vector<std::thread> pool;
    int used = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, w, begin, end] { body(static_cast<int>(w), begin, end); });
        ++used;
    }
    for (auto& t : pool) t.join();
    return used;
}

inline int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace sketchid

#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace mfgsim {

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// depend only on (n, threads), never on scheduling, so any output written
/// to per-index slots is identical across thread counts.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
    if (threads <= 1 || n < 2) {
        body(std::size_t{0}, n);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(begin + chunk, n);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& t : pool) t.join();
}

/// Number of worker threads: MFGSIM_THREADS if set, hardware count otherwise.
int default_thread_count();

}  // namespace mfgsim

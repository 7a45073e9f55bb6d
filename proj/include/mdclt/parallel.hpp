#pragma once

// Deterministic work distribution: jobs are split into fixed-size chunks,
// threads pull chunks from an atomic counter, and per-chunk results land in
// preallocated slots. Merging in chunk order makes every reduction
// bit-identical no matter how many workers ran.

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mdclt {

inline int thread_count() {
    if (const char* env = std::getenv("MDCLT_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v > 64 ? 64 : v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return static_cast<int>(hw > 8 ? 8 : hw);
}

inline constexpr std::int64_t kDefaultChunk = 1024;

// Runs fn(chunk_index, begin, end) over [0, n) in chunks of `chunk` items.
template <class ChunkFn>
void parallel_chunks(std::int64_t n, std::int64_t chunk, const ChunkFn& fn) {
    if (n <= 0) return;
    if (chunk <= 0) chunk = kDefaultChunk;
    const std::int64_t n_chunks = (n + chunk - 1) / chunk;
    const int workers = static_cast<int>(std::min<std::int64_t>(thread_count(), n_chunks));

    if (workers <= 1) {
        for (std::int64_t ci = 0; ci < n_chunks; ++ci)
            fn(ci, ci * chunk, std::min(n, (ci + 1) * chunk));
        return;
    }

    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::int64_t ci = next.fetch_add(1, std::memory_order_relaxed);
            if (ci >= n_chunks) return;
            try {
                fn(ci, ci * chunk, std::min(n, (ci + 1) * chunk));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n_chunks, std::memory_order_relaxed);  // drain remaining work
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// Chunked map-reduce: State must be default-constructible; accumulate is
// called per item inside a chunk-local state, merge folds chunk states in
// fixed chunk order.
template <class State, class Accumulate, class Merge>
State chunked_reduce(std::int64_t n, std::int64_t chunk, const Accumulate& accumulate,
                     const Merge& merge) {
    if (n <= 0) return State{};
    if (chunk <= 0) chunk = kDefaultChunk;
    const std::int64_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<State> states(static_cast<std::size_t>(n_chunks));
    parallel_chunks(n, chunk, [&](std::int64_t ci, std::int64_t lo, std::int64_t hi) {
        State& st = states[static_cast<std::size_t>(ci)];
        for (std::int64_t i = lo; i < hi; ++i) accumulate(st, i);
    });
    State total{};
    for (auto& st : states) merge(total, st);
    return total;
}

} // namespace mdclt

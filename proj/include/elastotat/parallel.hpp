#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace elastotat::par {

// Results of every parallel primitive here are bitwise independent of the
// thread count: work is split into chunks whose boundaries depend only on the
// problem size, chunks write disjoint outputs, and reductions combine
// per-chunk partials in chunk order on one thread.

namespace detail {
inline std::atomic<int>& override_slot() {
    static std::atomic<int> v{0};  // 0 = not set
    return v;
}
inline int env_threads() {
    if (const char* s = std::getenv("ETAT_THREADS")) {
        int n = std::atoi(s);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}
}  // namespace detail

/// Cap the number of worker threads (0 restores the ETAT_THREADS/hardware default).
inline void set_thread_override(int n) { detail::override_slot().store(n); }

inline int thread_count() {
    int o = detail::override_slot().load();
    return o > 0 ? o : detail::env_threads();
}

/// Run fn(lo, hi) over [0, n) split into fixed-size chunks.
template <typename Fn>
void for_chunks(std::int64_t n, std::int64_t chunk, Fn&& fn) {
    if (n <= 0) return;
    if (chunk <= 0) chunk = 1;
    const std::int64_t n_chunks = (n + chunk - 1) / chunk;
    const int nt = thread_count();
    if (nt <= 1 || n_chunks == 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c)
            fn(c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            fn(c * chunk, std::min(n, (c + 1) * chunk));
        }
    };
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(std::min<std::int64_t>(nt, n_chunks)) - 1;
    pool.reserve(spawn);
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

/// Parallel loop over single indices.
template <typename Fn>
void for_each_index(std::int64_t n, Fn&& fn) {
    for_chunks(n, 4096, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
}

/// Deterministic sum: partial(lo, hi) per fixed chunk, combined in chunk order.
template <typename Partial>
double reduce_sum(std::int64_t n, Partial&& partial, std::int64_t chunk = 4096) {
    if (n <= 0) return 0.0;
    if (chunk <= 0) chunk = 1;
    const std::int64_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<double> partials(static_cast<std::size_t>(n_chunks), 0.0);
    for_chunks(n, chunk, [&](std::int64_t lo, std::int64_t hi) {
        partials[static_cast<std::size_t>(lo / chunk)] = partial(lo, hi);
    });
    double s = 0.0;
    for (double p : partials) s += p;
    return s;
}

}  // namespace elastotat::par

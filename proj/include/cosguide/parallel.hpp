#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace cosguide {

/// Run fn(i) for i in [0, n) across up to `threads` workers (0 = hardware
/// count). Work items must write only to their own slots; the first thrown
/// exception is rethrown on the calling thread after all workers join.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t nt = threads > 0 ? static_cast<std::size_t>(threads) : (hw ? hw : 1);
    nt = std::min(nt, n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t w = 0; w < nt; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Pairwise (cascade) summation; deterministic and more accurate than a
/// running sum for long reductions.
inline double pairwise_sum(const std::vector<double>& v) {
    std::vector<double> buf = v;
    std::size_t n = buf.size();
    while (n > 1) {
        std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i < n / 2; ++i) buf[i] = buf[2 * i] + buf[2 * i + 1];
        if (n % 2) buf[n / 2] = buf[n - 1];
        n = half;
    }
    return n == 1 ? buf[0] : 0.0;
}

} // namespace cosguide

#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace hyrf {

/// Splits [0, n) into `threads` contiguous chunks and calls
/// `fn(begin, end, worker)` for each, worker 0 on the calling thread.
/// The partition depends only on (n, threads), so per-worker results merged
/// in worker order are reproducible for a fixed thread count.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads <= 1) {
        if (n > 0) fn(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const int chunk = (n + threads - 1) / threads;
    for (int w = 1; w < threads; ++w) {
        const int b = w * chunk, e = std::min(n, b + chunk);
        pool.emplace_back([&, b, e, w] {
            try {
                if (b < e) fn(b, e, w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    try {
        fn(0, std::min(n, chunk), 0);
    } catch (...) {
        errors[0] = std::current_exception();
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Worker count used by parallel_for for a given request.
inline int effective_workers(int n, int threads) { return std::max(1, std::min(threads, n)); }

}  // namespace hyrf

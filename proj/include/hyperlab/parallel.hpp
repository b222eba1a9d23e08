#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hyperlab {

/// Number of worker threads to use when the caller passes 0.
inline int default_threads()
{
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

/// Runs body(i) for i in [0, n) on up to `threads` workers.  Each index must
/// write only to its own output slot, which makes results independent of the
/// thread count and scheduling.  The first exception (lowest index) is rethrown.
template <class Body> void parallel_for(std::size_t n, int threads, Body&& body)
{
    if (threads <= 0) threads = default_threads();
    const std::size_t workers = std::min<std::size_t>(std::size_t(threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> counter{0};
    std::mutex err_mutex;
    std::size_t err_index = n;
    std::exception_ptr err;
    auto work = [&]() {
        for (;;) {
            const std::size_t i = counter.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

} // namespace hyperlab

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace selfish {

/// Runs body(i) for i in [0, count) on up to hardware_concurrency threads.
/// Work items are claimed dynamically, so callers must write results into
/// per-index slots and combine them in index order afterwards.
template <class Body>
void parallel_for(std::size_t count, Body&& body, unsigned max_threads = 0)
{
    unsigned threads = max_threads != 0 ? max_threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (error)
        std::rethrow_exception(error);
}

} // namespace selfish

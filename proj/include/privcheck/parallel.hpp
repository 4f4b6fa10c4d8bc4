#ifndef PRIVCHECK_PARALLEL_HPP
#define PRIVCHECK_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace privcheck {

/// Runs fn(0..n-1) on up to `max_parallel` threads. The first exception
/// thrown by any call is rethrown once all workers have stopped.
template <typename F>
void parallel_for(std::size_t n, std::size_t max_parallel, F&& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min(n, max_parallel));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const auto i = next.fetch_add(1);
                    if (i >= n || failed.load()) return;
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace privcheck

#endif

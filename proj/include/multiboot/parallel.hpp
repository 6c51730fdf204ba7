#ifndef MULTIBOOT_PARALLEL_HPP
#define MULTIBOOT_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace multiboot {

/// Worker count from MULTIBOOT_THREADS, else the hardware concurrency.
inline std::size_t default_threads() {
    std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MULTIBOOT_THREADS")) {
        try {
            long v = std::stol(env);
            if (v >= 1) {
                return static_cast<std::size_t>(v);
            }
        } catch (...) {
        }
    }
    return hw;
}

/**
 * Run `fun(i)` for every i in [0, n) over up to `threads` workers
 * (0 = `default_threads()`). Callers write results by index, so output is
 * independent of scheduling. If several iterations throw, the exception of
 * the lowest index is rethrown.
 */
template<class Function>
void parallel_for(std::size_t n, std::size_t threads, Function fun) {
    if (threads == 0) {
        threads = default_threads();
    }
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fun(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_lock;
    std::exception_ptr error;
    std::size_t error_index = n;

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            {
                std::lock_guard lock(error_lock);
                if (error && i > error_index) {
                    continue;
                }
            }
            try {
                fun(i);
            } catch (...) {
                std::lock_guard lock(error_lock);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (std::size_t t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    pool.clear();

    if (error) {
        std::rethrow_exception(error);
    }
}

} // namespace multiboot

#endif

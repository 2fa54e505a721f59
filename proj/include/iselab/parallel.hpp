#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace iselab {

/// Runs f(i) for i in [0, count) on `workers` threads. Work is handed out by an atomic
/// counter, so callers must store results by index to stay independent of scheduling.
/// The first exception thrown by any f(i) is rethrown after all threads join.
template <class F>
void parallel_for(std::size_t count, int workers, F&& f) {
    const std::size_t w = std::min<std::size_t>(std::max(1, workers), std::max<std::size_t>(count, 1));
    if (w <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(w - 1);
    for (std::size_t t = 1; t < w; ++t) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace iselab

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ecgra {

inline std::size_t default_jobs() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work items are
// independent; callers make results deterministic by writing into
// preallocated slots. The first exception is rethrown on the caller.
template <typename Fn>
inline void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::exception_ptr error;
    std::mutex error_mutex;
    std::size_t next = 0;
    std::mutex next_mutex;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            while (true) {
                std::size_t i;
                {
                    std::lock_guard<std::mutex> lock(next_mutex);
                    if (next >= n) return;
                    i = next++;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace ecgra

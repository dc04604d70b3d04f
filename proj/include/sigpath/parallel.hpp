#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sigpath {

/// Calls body(i) for i in [0, count) on up to `jobs` threads. Items are
/// interleaved across workers; each index is visited exactly once, so any
/// per-index output slot is written deterministically. The first exception
/// thrown by a worker is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t count, std::size_t jobs, Body&& body) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w)
            workers.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += jobs)
                        body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            });
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace sigpath

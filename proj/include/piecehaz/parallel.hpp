#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace piecehaz {

// Worker count: hardware concurrency, capped by PIECEHAZ_THREADS when set.
inline std::size_t thread_budget() {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PIECEHAZ_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
        } catch (...) {
        }
    }
    return n;
}

namespace detail {
inline thread_local bool in_parallel_region = false;
}

// Runs task(i) for i in [0, count). Tasks must not share mutable state.
// The first exception (by task index) is rethrown after all workers finish.
// Nested calls from inside a worker run serially.
template <class Task>
void parallel_for(std::size_t count, Task&& task) {
    const std::size_t workers =
        detail::in_parallel_region ? 1 : std::min(thread_budget(), count);
    std::vector<std::exception_ptr> errors(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                detail::in_parallel_region = true;
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        task(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace piecehaz

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace qht {

inline unsigned effective_jobs(int jobs) {
    if (jobs > 0) return static_cast<unsigned>(jobs);
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Cooperative cancellation flag, set by the CLI's SIGINT handler. Long
// replicate loops poll it and bail out with interrupted_error so partial
// results can still be flushed.
inline std::atomic<bool>& interrupt_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

struct interrupted_error : std::runtime_error {
    interrupted_error() : std::runtime_error("interrupted") {}
};

inline void check_interrupt() {
    if (interrupt_flag().load(std::memory_order_relaxed)) throw interrupted_error{};
}

// Runs fn(i) for every i in [0, count), distributing indices over up to
// `jobs` threads (jobs <= 0 means hardware concurrency). Worker exceptions
// are rethrown on the calling thread.
inline void parallel_for(std::size_t count, int jobs,
                         const std::function<void(std::size_t)>& fn) {
    const std::size_t nthreads =
        std::min<std::size_t>(effective_jobs(jobs), count ? count : 1);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(nthreads);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
                next.store(count);  // drain remaining work
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace qht

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tariffcge {

inline std::size_t default_thread_budget()
{
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Evaluates fn(k) for k in [0, count) on up to `threads` workers and returns
/// the results in index order. Results land in pre-sized slots, so the output
/// never depends on scheduling. The first exception by index is rethrown.
template <class Fn>
auto parallel_map(std::size_t count, std::size_t threads, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))>
{
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(count);
    std::vector<std::exception_ptr> errors(count);
    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
    if (workers <= 1) {
        for (std::size_t k = 0; k < count; ++k) {
            try {
                out[k] = fn(k);
            } catch (...) {
                errors[k] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        auto work = [&] {
            for (;;) {
                const std::size_t k = next.fetch_add(1);
                if (k >= count || failed.load()) return;
                try {
                    out[k] = fn(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                    failed.store(true);
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace tariffcge

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace peaklab {

/// Evaluates fn(i) for i in [0, count) on up to `jobs` threads. Results land
/// in index order, so aggregation is independent of scheduling. The first
/// exception (lowest index) is rethrown.
template <class Fn>
auto parallel_map(int count, int jobs, Fn&& fn) -> std::vector<decltype(fn(0))> {
    using Result = decltype(fn(0));
    std::vector<Result> results(count);
    std::vector<std::exception_ptr> errors(count);
    const int workers = std::clamp(jobs, 1, std::max(count, 1));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    results[i] = fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

}  // namespace peaklab

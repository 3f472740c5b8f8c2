#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lorentz {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Work items must
/// write only to their own output slot; results are then independent of the
/// worker count. The first exception thrown by any item is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const auto i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    next = count;
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

/// Mean and standard error of independent batch values.
struct Estimate
{
    double mean = 0;
    double stderr_ = 0;
    std::size_t count = 0;
};

inline Estimate batch_estimate(const std::vector<double>& values)
{
    Estimate e;
    e.count = values.size();
    if (values.empty())
        return e;
    double s = 0;
    for (double v : values)
        s += v;
    e.mean = s / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values)
            ss += (v - e.mean) * (v - e.mean);
        const double var = ss / static_cast<double>(values.size() - 1);
        e.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
    }
    return e;
}

} // namespace lorentz

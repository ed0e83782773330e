#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace splab {

/// Pairwise (cascade) summation: deterministic for a fixed element order and
/// more accurate than sequential accumulation on long Monte Carlo vectors.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    double sd = 0.0;
    size_t count = 0;
};

inline MeanSe mean_se(std::span<const double> v) {
    MeanSe r;
    r.count = v.size();
    if (v.empty()) return r;
    r.mean = pairwise_sum(v) / static_cast<double>(v.size());
    if (v.size() < 2) return r;
    std::vector<double> sq(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - r.mean;
        sq[i] = d * d;
    }
    const double var =
        pairwise_sum(sq) / static_cast<double>(v.size() - 1);
    r.sd = std::sqrt(var);
    r.se = r.sd / std::sqrt(static_cast<double>(v.size()));
    return r;
}

/// Run fn(0..count-1) on a bounded pool; rethrows the first worker exception.
/// Output determinism is the caller's job (index-addressed result slots).
inline void parallel_for(long count, int threads,
                         const std::function<void(long)>& fn) {
    if (threads <= 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (threads == 1 || count <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace splab

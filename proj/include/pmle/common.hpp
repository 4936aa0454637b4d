#ifndef PMLE_COMMON_HPP
#define PMLE_COMMON_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pmle {

/// Raised for every contract violation and numerical failure in the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Sample = std::vector<double>;

/// Random stream. Streams are passed by value or reference, never shared between workers.
using Rng = std::mt19937_64;

/// Child stream derived from (master seed, unit index). Independent of scheduling.
inline Rng child_stream(std::uint64_t master, std::uint64_t unit)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(unit), static_cast<std::uint32_t>(unit >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Worker count: explicit request, else PMLE_THREADS, else hardware concurrency.
inline unsigned resolve_threads(unsigned requested = 0)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PMLE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index runs exactly once;
/// results must be written to per-index slots so the outcome is independent of scheduling.
/// The first exception thrown by any body is rethrown after all workers join.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    bool expected = false;
                    if (failed.compare_exchange_strong(expected, true)) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

/// Trapezoid integral of samples on an evenly spaced grid with spacing dx.
inline double trapezoid(const std::vector<double>& values, double dx)
{
    if (values.size() < 2) return 0.0;
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
    return s * dx;
}

inline std::vector<double> linspace(double a, double b, std::size_t count)
{
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = a;
        return out;
    }
    const double step = (b - a) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = a + step * static_cast<double>(i);
    out.back() = b;
    return out;
}

/// Bisection root of a nondecreasing function crossing `target` on [lo, hi].
inline double bisect_increasing(const std::function<double(double)>& f, double target, double lo, double hi,
                                double tol = 1e-10)
{
    for (int it = 0; it < 400 && hi - lo > tol * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace pmle

#endif

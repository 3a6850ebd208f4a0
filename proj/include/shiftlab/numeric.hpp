#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace shiftlab {

// Two-sided 99% normal quantile used for every confidence interval.
inline constexpr double z99 = 2.5758293035489004;

// Thrown when an accumulation goes non-finite; carries the offending step.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& what, std::size_t step)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

// Pairwise (tree) summation: order-deterministic and more accurate than a
// running sum, so reductions are reproducible under any parallel split.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 32) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

// Monte Carlo mean with a 99% CLT half-width.
struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t n = 0;
};

inline Estimate mean_estimate(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("mean_estimate: empty sample");
    Estimate e;
    e.n = samples.size();
    e.mean = pairwise_sum(samples) / static_cast<double>(e.n);
    if (e.n == 1) return e;
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double d = samples[i] - e.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(e.n - 1);
    e.half_width = z99 * std::sqrt(var / static_cast<double>(e.n));
    return e;
}

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Asymptotic Kolmogorov-Smirnov p-value for a one-sample statistic d at
// sample size n (Stephens' small-sample correction).
inline double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        p += sign * term;
        sign = -sign;
        if (term < 1e-12) break;
    }
    p *= 2.0;
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

// One-sample KS test of `sample` against the standard normal.
inline double ks_statistic_normal(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_statistic_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = normal_cdf(sample[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::abs(cdf - lo), std::abs(hi - cdf)));
    }
    return d;
}

// Runs fn(i) for i in [0, count) split over `threads` workers. Results must
// be written to disjoint, preallocated slots; reductions happen afterwards in
// index order, which keeps every aggregate independent of the worker count.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace shiftlab

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

namespace stpca {

/// log(sum_i exp(x_i)) without overflow; -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> x) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : x) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - m);
    return m + std::log(acc);
}

/// Neumaier-compensated sum; order-deterministic for a fixed traversal.
inline double compensated_sum(std::span<const double> x) {
    double sum = 0.0, comp = 0.0;
    for (double v : x) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;  // sample stdev / sqrt(n)
    std::size_t n = 0;
};

/// Two-pass mean and standard error. Requires n >= 1; stderr_ is 0 for n < 2.
inline MeanStderr summarize(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("summarize: empty sample");
    MeanStderr out;
    out.n = x.size();
    out.mean = compensated_sum(x) / static_cast<double>(x.size());
    if (x.size() < 2) return out;
    double acc = 0.0;
    for (double v : x) {
        const double dlt = v - out.mean;
        acc += dlt * dlt;
    }
    const double var = acc / static_cast<double>(x.size() - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(x.size()));
    return out;
}

/// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double sq(double x) { return x * x; }

}  // namespace stpca

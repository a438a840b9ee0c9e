#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "stpca/combinatorics.hpp"
#include "stpca/model.hpp"
#include "stpca/rng.hpp"

// Brute-force reference implementations. These recompute everything from the
// model definition with naive dense loops and plain exponentials; they share
// only the domain types with the optimized paths they validate.

namespace stpca::oracle {

struct OracleFailure {
    std::string input_digest;
    double expected = 0.0;
    double got = 0.0;
};

struct OracleReport {
    std::string name;
    std::uint64_t cases_run = 0;
    double max_abs_discrepancy = 0.0;
    std::vector<OracleFailure> failures;

    bool passed() const { return failures.empty(); }

    void record(const std::string& digest, double expected, double got,
                double tolerance) {
        ++cases_run;
        const double gap = std::abs(expected - got);
        max_abs_discrepancy = std::max(max_abs_discrepancy, gap);
        if (!(gap <= tolerance)) {
            failures.push_back({digest, expected, got});
        }
    }
};

inline void to_json(nlohmann::json& j, const OracleReport& rep) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : rep.failures) {
        failures.push_back({{"input_digest", f.input_digest},
                            {"expected", f.expected},
                            {"got", f.got}});
    }
    j = nlohmann::json{{"name", rep.name},
                       {"cases_run", rep.cases_run},
                       {"max_abs_discrepancy", rep.max_abs_discrepancy},
                       {"failures", failures}};
}

/// x^⊗d as a dense array, straight from the definition: walk every flat cell,
/// decode its index tuple, and multiply the vector entries.
inline std::vector<double> dense_tensor(std::span<const std::uint32_t> support,
                                        const ProblemConfig& cfg) {
    const double entry = 1.0 / std::sqrt(static_cast<double>(cfg.k));
    auto coord_value = [&](std::uint32_t coord) {
        return std::binary_search(support.begin(), support.end(), coord) ? entry : 0.0;
    };
    std::vector<double> out;
    if (cfg.mode == ObservationLayout::FullTensor) {
        out.resize(cfg.tensor_length());
        for (std::size_t flat = 0; flat < out.size(); ++flat) {
            std::size_t rem = flat;
            double prod = 1.0;
            for (std::uint32_t j = 0; j < cfg.d; ++j) {
                std::size_t stride = 1;
                for (std::uint32_t l = j + 1; l < cfg.d; ++l) stride *= cfg.p;
                prod *= coord_value(static_cast<std::uint32_t>(rem / stride));
                rem %= stride;
            }
            out[flat] = prod;
        }
    } else {
        out.reserve(cfg.tensor_length());
        auto cell = first_combination(cfg.d);
        do {
            double prod = 1.0;
            for (std::uint32_t c : cell) prod *= coord_value(c);
            out.push_back(prod);
        } while (next_combination(cell, cfg.p));
    }
    return out;
}

inline double dense_sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

namespace detail {

/// Posterior weights by plain exponentials of the full Gaussian
/// log-likelihood -|Y - sqrt(lambda) X_i|^2 / 2 (no log-space tricks beyond a
/// uniform shift). Refuses spreads that naive exponentials cannot represent.
inline std::vector<double> naive_weights(const Observation& y,
                                         const HypothesisSpace& space) {
    const double root_lambda = std::sqrt(y.lambda);
    std::vector<double> half_sq(space.count());
    for (std::uint64_t i = 0; i < space.count(); ++i) {
        std::vector<double> x = dense_tensor(space.support(i), y.config);
        double acc = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) {
            const double diff = y.data[c] - root_lambda * x[c];
            acc += diff * diff;
        }
        half_sq[i] = 0.5 * acc;
    }
    const double lo = *std::min_element(half_sq.begin(), half_sq.end());
    const double hi = *std::max_element(half_sq.begin(), half_sq.end());
    if (hi - lo > 50.0) {
        throw std::domain_error(
            "brute posterior: snr too large for naive exponentials "
            "(exponent spread > 50 after centering)");
    }
    std::vector<double> w(space.count());
    double total = 0.0;
    for (std::uint64_t i = 0; i < space.count(); ++i) {
        w[i] = std::exp(lo - half_sq[i]);
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

}  // namespace detail

/// Posterior-mean tensor by direct summation of dense hypothesis tensors.
/// Caps M_p at 10^4; rejects snr beyond the naive-exponential range.
inline std::vector<double> brute_posterior_mean(const Observation& y,
                                                const HypothesisSpace& space) {
    if (space.count() > 10'000) {
        throw std::length_error("brute_posterior_mean: M_p cap 10^4 exceeded");
    }
    const std::vector<double> w = detail::naive_weights(y, space);
    std::vector<double> mean(y.data.size(), 0.0);
    for (std::uint64_t i = 0; i < space.count(); ++i) {
        const std::vector<double> x = dense_tensor(space.support(i), y.config);
        for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += w[i] * x[c];
    }
    return mean;
}

/// Posterior expected squared error E[|V - X|^2 | Y] of an arbitrary
/// candidate tensor, by direct summation over the hypothesis space.
inline double brute_posterior_risk(const Observation& y, const HypothesisSpace& space,
                                   std::span<const double> candidate) {
    const std::vector<double> w = detail::naive_weights(y, space);
    double risk = 0.0;
    for (std::uint64_t i = 0; i < space.count(); ++i) {
        const std::vector<double> x = dense_tensor(space.support(i), y.config);
        risk += w[i] * dense_sq_dist(candidate, x);
    }
    return risk;
}

struct ConstrainedArgmin {
    std::vector<double> minimizer;  // a point of C_{n,s}
    double risk = 0.0;
};

/// Exact constrained-MSE minimizer over all C(n,s) candidates of C_{n,s}
/// (value s^{-1/2} on s cells), enumerated lexicographically with ties kept
/// at the first minimizer. Caps C(n,s) at 10^4.
inline ConstrainedArgmin brute_constrained_argmin(const Observation& y,
                                                  const HypothesisSpace& space,
                                                  std::uint64_t s) {
    const auto n = static_cast<std::uint32_t>(y.data.size());
    if (binomial(n, static_cast<std::uint32_t>(s)) > 10'000) {
        throw std::length_error("brute_constrained_argmin: C(n,s) cap 10^4 exceeded");
    }
    const std::vector<double> w = detail::naive_weights(y, space);
    std::vector<std::vector<double>> hyp(space.count());
    for (std::uint64_t i = 0; i < space.count(); ++i) {
        hyp[i] = dense_tensor(space.support(i), y.config);
    }

    const double value = 1.0 / std::sqrt(static_cast<double>(s));
    ConstrainedArgmin best;
    bool first = true;
    std::vector<double> cand(y.data.size(), 0.0);
    auto cells = first_combination(static_cast<std::uint32_t>(s));
    do {
        std::fill(cand.begin(), cand.end(), 0.0);
        for (std::uint32_t c : cells) cand[c] = value;
        double risk = 0.0;
        for (std::uint64_t i = 0; i < space.count(); ++i) {
            risk += w[i] * dense_sq_dist(cand, hyp[i]);
        }
        if (first || risk < best.risk) {
            first = false;
            best.risk = risk;
            best.minimizer = cand;
        }
    } while (next_combination(cells, n));
    return best;
}

struct RateTailEstimate {
    std::vector<double> thresholds;  // (m/k)^d, m = 0..k
    std::vector<double> tails;       // empirical P[overlap >= t]
    std::vector<double> stderrs;     // binomial stderr per tail
    std::uint64_t pair_samples = 0;
};

/// Empirical overlap tails from sampled independent support pairs
/// (partial Fisher-Yates draws, not the enumeration path).
inline RateTailEstimate brute_rate_tail(const ProblemConfig& config,
                                        std::uint64_t pair_samples) {
    config.validate();
    if (pair_samples < 10'000) {
        throw std::invalid_argument("brute_rate_tail: pair_samples must be >= 10^4");
    }
    Xoshiro256pp rng = derive_stream(config.seed, 0x6F7261636C65ULL);
    const std::uint32_t p = config.p, k = config.k;

    std::vector<std::uint32_t> pool(p);
    std::vector<bool> member(p);
    auto draw_support = [&](std::vector<std::uint32_t>& out) {
        for (std::uint32_t i = 0; i < p; ++i) pool[i] = i;
        for (std::uint32_t i = 0; i < k; ++i) {
            const auto j =
                i + static_cast<std::uint32_t>(uniform_below(rng, p - i));
            std::swap(pool[i], pool[j]);
            out[i] = pool[i];
        }
    };

    std::vector<std::uint64_t> overlap_count(k + 1, 0);
    std::vector<std::uint32_t> a(k), b(k);
    for (std::uint64_t it = 0; it < pair_samples; ++it) {
        draw_support(a);
        draw_support(b);
        std::fill(member.begin(), member.end(), false);
        for (std::uint32_t v : a) member[v] = true;
        std::uint32_t m = 0;
        for (std::uint32_t v : b) m += member[v] ? 1u : 0u;
        ++overlap_count[m];
    }

    RateTailEstimate est;
    est.pair_samples = pair_samples;
    std::uint64_t cum = 0;
    std::vector<double> tails(k + 1);
    for (std::uint32_t m = k + 1; m-- > 0;) {
        cum += overlap_count[m];
        tails[m] = static_cast<double>(cum) / static_cast<double>(pair_samples);
    }
    for (std::uint32_t m = 0; m <= k; ++m) {
        est.thresholds.push_back(
            std::pow(static_cast<double>(m) / static_cast<double>(k),
                     static_cast<double>(config.d)));
        est.tails.push_back(tails[m]);
        est.stderrs.push_back(std::sqrt(tails[m] * (1.0 - tails[m]) /
                                        static_cast<double>(pair_samples)));
    }
    return est;
}

inline std::string config_digest(const ProblemConfig& cfg, std::uint64_t trial) {
    std::ostringstream os;
    os << "p=" << cfg.p << ",k=" << cfg.k << ",d=" << cfg.d << ",beta=" << cfg.beta
       << ",seed=" << cfg.seed << ",trial=" << trial;
    return os.str();
}

}  // namespace stpca::oracle

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "stpca/combinatorics.hpp"
#include "stpca/rng.hpp"

namespace stpca {

/// Layout of the observed tensor: all p^d entries, or only the strictly
/// increasing index tuples (the hypergraph variant, length C(p,d)).
enum class ObservationLayout { FullTensor, UpperTriangular };

/// Definition of the critical snr lambda_n in terms of M_p = C(p,k).
enum class LambdaScale { TwoLogM, LogM };

inline std::string to_string(ObservationLayout m) {
    return m == ObservationLayout::FullTensor ? "FullTensor" : "UpperTriangular";
}

inline std::string to_string(LambdaScale s) {
    return s == LambdaScale::TwoLogM ? "TwoLogM" : "LogM";
}

/// Sparse Bernoulli tensor-PCA problem: a k-sparse unit vector x in R^p with
/// entries k^{-1/2} on its support, observed as Y = sqrt(lambda)·x^⊗d + Z
/// with effective snr lambda = beta·lambda_n.
struct ProblemConfig {
    std::uint32_t p = 0;
    std::uint32_t k = 0;
    std::uint32_t d = 2;
    ObservationLayout mode = ObservationLayout::FullTensor;
    LambdaScale lambda_scale = LambdaScale::TwoLogM;
    double beta = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (p < 1) throw std::invalid_argument("config: p must satisfy p >= 1");
        if (k < 1 || k > p) {
            std::ostringstream os;
            os << "config: k must satisfy 1 <= k <= p (got k=" << k << ", p=" << p << ")";
            throw std::invalid_argument(os.str());
        }
        if (d < 2) throw std::invalid_argument("config: d must satisfy d >= 2");
        if (mode == ObservationLayout::UpperTriangular && d > p) {
            throw std::invalid_argument(
                "config: UpperTriangular requires d <= p (tuples are d-subsets)");
        }
        if (!(beta >= 0.0) || !std::isfinite(beta)) {
            throw std::invalid_argument("config: beta must be finite and >= 0");
        }
    }

    /// M_p = C(p,k); saturates at 2^64-1.
    std::uint64_t hypothesis_count() const { return binomial(p, k); }

    double log_hypothesis_count() const {
        const std::uint64_t m = hypothesis_count();
        if (m == kBinomialSaturated) return log_binomial(p, k);
        return std::log(static_cast<double>(m));
    }

    /// lambda_n = 2·ln M_p (TwoLogM) or ln M_p (LogM).
    double lambda_n() const {
        const double lm = log_hypothesis_count();
        return lambda_scale == LambdaScale::TwoLogM ? 2.0 * lm : lm;
    }

    /// Effective snr lambda = beta·lambda_n.
    double effective_lambda() const { return beta * lambda_n(); }

    /// Flat length of an observation: p^d (FullTensor) or C(p,d) (UpperTriangular).
    std::size_t tensor_length() const {
        if (mode == ObservationLayout::UpperTriangular) {
            const std::uint64_t n = binomial(p, d);
            if (n > (1ULL << 31)) throw std::length_error("config: C(p,d) too large");
            return static_cast<std::size_t>(n);
        }
        std::uint64_t n = 1;
        for (std::uint32_t i = 0; i < d; ++i) {
            n *= p;
            if (n > (1ULL << 31)) throw std::length_error("config: p^d too large");
        }
        return static_cast<std::size_t>(n);
    }

    /// Nonzero count s of a hypothesis tensor: k^d (FullTensor), C(k,d) (UT).
    std::uint64_t sparsity() const {
        if (mode == ObservationLayout::UpperTriangular) return binomial(k, d);
        std::uint64_t s = 1;
        for (std::uint32_t i = 0; i < d; ++i) s *= k;
        return s;
    }

    /// Entry value of x^⊗d on its support: k^{-d/2}.
    double vertex_value() const {
        return std::pow(static_cast<double>(k), -0.5 * static_cast<double>(d));
    }

    /// Squared Frobenius norm of any hypothesis tensor (1 in FullTensor mode).
    double hypothesis_sq_norm() const {
        if (mode == ObservationLayout::FullTensor) return 1.0;
        return static_cast<double>(sparsity()) * sq_(vertex_value());
    }

    friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;

private:
    static double sq_(double x) { return x * x; }
};

/// A point of C_{p,k}: the sorted support of a k-sparse vector with entries
/// k^{-1/2}; the vector has unit Euclidean norm by construction.
struct SparseSignal {
    std::uint32_t p = 0;
    std::uint32_t k = 0;
    std::vector<std::uint32_t> support;

    friend bool operator==(const SparseSignal&, const SparseSignal&) = default;
};

/// A noisy tensor observation together with the snr it was generated at.
/// `truth` is retained for risk scoring and absent for externally built Y.
struct Observation {
    std::vector<double> data;
    double lambda = 0.0;
    ProblemConfig config;
    std::optional<SparseSignal> truth;
};

/// All M_p = C(p,k) supports, materialized in lexicographic order.
class HypothesisSpace {
public:
    static constexpr std::uint64_t kDefaultCap = 1'000'000;

    HypothesisSpace(ProblemConfig cfg, std::vector<std::uint32_t> flat,
                    std::uint64_t count)
        : config_(cfg), flat_(std::move(flat)), count_(count) {}

    const ProblemConfig& config() const { return config_; }
    std::uint64_t count() const { return count_; }

    std::span<const std::uint32_t> support(std::uint64_t i) const {
        return {flat_.data() + i * config_.k, config_.k};
    }

    SparseSignal signal(std::uint64_t i) const {
        const auto s = support(i);
        return SparseSignal{config_.p, config_.k, {s.begin(), s.end()}};
    }

private:
    ProblemConfig config_;
    std::vector<std::uint32_t> flat_;  // stride k
    std::uint64_t count_;
};

/// Enumerate C_{p,k} in lexicographic order. Refuses hypothesis spaces larger
/// than `cap` (exact posterior enumeration is the whole point; the default cap
/// keeps one posterior evaluation around a second at d=2 desk scale).
inline HypothesisSpace enumerate_supports(
    const ProblemConfig& config, std::uint64_t cap = HypothesisSpace::kDefaultCap) {
    config.validate();
    const std::uint64_t count = config.hypothesis_count();
    if (count > cap) {
        std::ostringstream os;
        os << "hypothesis space too large: C(" << config.p << "," << config.k
           << ") = " << count << " exceeds cap " << cap;
        throw std::length_error(os.str());
    }
    std::vector<std::uint32_t> flat;
    flat.reserve(static_cast<std::size_t>(count) * config.k);
    auto c = first_combination(config.k);
    do {
        flat.insert(flat.end(), c.begin(), c.end());
    } while (next_combination(c, config.p));
    return HypothesisSpace(config, std::move(flat), count);
}

namespace detail {

/// Visit all d-tuples over `support` (FullTensor: the full odometer;
/// UpperTriangular: strictly increasing tuples only), passing each tuple's
/// flat index into the observation layout.
template <typename Fn>
void for_each_support_cell(std::span<const std::uint32_t> support,
                           const ProblemConfig& cfg, Fn&& fn) {
    const std::uint32_t d = cfg.d;
    const auto k = static_cast<std::uint32_t>(support.size());
    if (cfg.mode == ObservationLayout::FullTensor) {
        std::vector<std::uint32_t> digit(d, 0);
        for (;;) {
            std::size_t flat = 0;
            for (std::uint32_t j = 0; j < d; ++j) {
                flat = flat * cfg.p + support[digit[j]];
            }
            fn(flat);
            std::uint32_t pos = d;
            while (pos-- > 0) {
                if (++digit[pos] < k) break;
                digit[pos] = 0;
                if (pos == 0) return;
            }
        }
    } else {
        if (d > k) return;  // no strictly increasing d-tuple fits in the support
        std::vector<std::uint32_t> pick = first_combination(d);
        std::vector<std::uint32_t> cell(d);
        do {
            for (std::uint32_t j = 0; j < d; ++j) cell[j] = support[pick[j]];
            fn(static_cast<std::size_t>(combination_rank(cell, cfg.p)));
        } while (next_combination(pick, k));
    }
}

}  // namespace detail

/// The rank-1 tensor x^⊗d as a flat array (length per `mode`). FullTensor
/// entries are k^{-d/2} on support^d and the Frobenius norm is exactly 1;
/// UpperTriangular keeps the masked entries unrenormalized (norm
/// sqrt(C(k,d)/k^d), zero tensor when d > k).
inline std::vector<double> tensorize(const SparseSignal& x, std::uint32_t d,
                                     ObservationLayout mode) {
    ProblemConfig cfg;
    cfg.p = x.p;
    cfg.k = x.k;
    cfg.d = d;
    cfg.mode = mode;
    cfg.validate();
    std::vector<double> out(cfg.tensor_length(), 0.0);
    const double v = cfg.vertex_value();
    detail::for_each_support_cell(x.support, cfg,
                                  [&](std::size_t flat) { out[flat] = v; });
    return out;
}

inline std::vector<double> tensorize(const SparseSignal& x,
                                     const ProblemConfig& cfg) {
    return tensorize(x, cfg.d, cfg.mode);
}

/// <x^⊗d, Y> computed over the support cells only: k^{-d/2} times the sum of
/// the observation entries indexed by support^d (or the strictly increasing
/// tuples inside the support in UpperTriangular mode). Cost O(k^d).
inline double signal_tensor_inner(std::span<const std::uint32_t> support,
                                  const Observation& y) {
    const ProblemConfig& cfg = y.config;
    if (support.size() != cfg.k) {
        throw std::invalid_argument("signal_tensor_inner: support size != k");
    }
    double acc = 0.0;
    detail::for_each_support_cell(support, cfg,
                                  [&](std::size_t flat) { acc += y.data[flat]; });
    return cfg.vertex_value() * acc;
}

namespace detail {

inline Observation make_instance(const ProblemConfig& config,
                                 std::uint64_t trial_index, bool with_noise) {
    config.validate();
    const std::uint64_t count = config.hypothesis_count();
    if (count == kBinomialSaturated) {
        throw std::length_error("generate_instance: hypothesis space overflows");
    }
    Xoshiro256pp rng = derive_stream(config.seed, trial_index);
    const std::uint64_t truth_rank = uniform_below(rng, count);
    SparseSignal truth{config.p, config.k,
                       combination_unrank(truth_rank, config.p, config.k)};

    Observation y;
    y.config = config;
    y.lambda = config.effective_lambda();
    y.data.assign(config.tensor_length(), 0.0);
    if (with_noise) {
        GaussianStream gauss(rng);
        gauss.fill(y.data);
    }
    const double amp = std::sqrt(y.lambda) * config.vertex_value();
    for_each_support_cell(truth.support, config,
                          [&](std::size_t flat) { y.data[flat] += amp; });
    y.truth = std::move(truth);
    return y;
}

}  // namespace detail

/// One seeded instance Y = sqrt(lambda)·x^⊗d + Z with the planted truth
/// attached. A pure function of (config, trial_index): the same pair always
/// reproduces the same bytes.
inline Observation generate_instance(const ProblemConfig& config,
                                     std::uint64_t trial_index) {
    return detail::make_instance(config, trial_index, /*with_noise=*/true);
}

/// Test hook: the same planted truth as generate_instance at this trial
/// index, with the noise stream forced to zero (Y = sqrt(lambda)·x^⊗d exactly).
inline Observation generate_noiseless_instance(const ProblemConfig& config,
                                               std::uint64_t trial_index) {
    return detail::make_instance(config, trial_index, /*with_noise=*/false);
}

// --- JSON (flat key-value object, exact field names, unknown keys rejected) ---

inline void to_json(nlohmann::json& j, const ProblemConfig& cfg) {
    j = nlohmann::json{{"p", cfg.p},
                       {"k", cfg.k},
                       {"d", cfg.d},
                       {"mode", to_string(cfg.mode)},
                       {"lambda_scale", to_string(cfg.lambda_scale)},
                       {"beta", cfg.beta},
                       {"seed", cfg.seed}};
}

inline void from_json(const nlohmann::json& j, ProblemConfig& cfg) {
    static const char* kFields[] = {"p",    "k",            "d",   "mode",
                                    "lambda_scale", "beta", "seed"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(std::begin(kFields), std::end(kFields),
                         [&](const char* f) { return key == f; }) ==
            std::end(kFields)) {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    cfg.p = j.at("p").get<std::uint32_t>();
    cfg.k = j.at("k").get<std::uint32_t>();
    cfg.d = j.at("d").get<std::uint32_t>();
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "FullTensor") {
        cfg.mode = ObservationLayout::FullTensor;
    } else if (mode == "UpperTriangular") {
        cfg.mode = ObservationLayout::UpperTriangular;
    } else {
        throw std::invalid_argument("config: bad mode '" + mode + "'");
    }
    const auto scale = j.at("lambda_scale").get<std::string>();
    if (scale == "TwoLogM") {
        cfg.lambda_scale = LambdaScale::TwoLogM;
    } else if (scale == "LogM") {
        cfg.lambda_scale = LambdaScale::LogM;
    } else {
        throw std::invalid_argument("config: bad lambda_scale '" + scale + "'");
    }
    cfg.beta = j.at("beta").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.validate();
}

}  // namespace stpca

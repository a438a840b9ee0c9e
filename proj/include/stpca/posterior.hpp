#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "stpca/model.hpp"
#include "stpca/numeric.hpp"

namespace stpca {

/// Exact posterior over the enumerated hypothesis space.
///
/// log_weights sum (in probability) to 1; mean is the posterior-mean tensor
/// E[X|Y], entrywise in [0, k^{-d/2}] since it is a convex combination of
/// {0, k^{-d/2}}-valued tensors.
struct PosteriorSummary {
    std::vector<double> log_weights;
    std::vector<double> mean;
    std::uint64_t map_index = 0;
};

namespace detail {

inline void require_match(const Observation& y, const HypothesisSpace& space) {
    if (y.config != space.config()) {
        throw std::invalid_argument("observation/hypothesis-space config mismatch");
    }
    if (y.data.size() != y.config.tensor_length()) {
        throw std::invalid_argument("observation length does not match layout");
    }
    for (double v : y.data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("observation contains non-finite entries");
        }
    }
}

/// <X_i, Y> for every hypothesis, O(M·k^d) total.
inline std::vector<double> hypothesis_inners(const Observation& y,
                                             const HypothesisSpace& space) {
    std::vector<double> inners(space.count());
    for (std::uint64_t i = 0; i < space.count(); ++i) {
        inners[i] = signal_tensor_inner(space.support(i), y);
    }
    return inners;
}

inline std::uint64_t argmax_first(std::span<const double> v) {
    std::uint64_t best = 0;
    for (std::uint64_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;  // strict: ties keep the smaller index
    }
    return best;
}

/// Normalized log posterior weights from the inner products. The Gaussian
/// constants and the quadratic term lambda·|X_i|^2/2 are identical across
/// hypotheses (all have the same norm), so under the uniform prior
/// log w_i = sqrt(lambda)·<X_i,Y> - logsumexp_j sqrt(lambda)·<X_j,Y>.
inline std::vector<double> log_weights_from_inners(std::span<const double> inners,
                                                   double lambda) {
    const double root_lambda = std::sqrt(lambda);
    std::vector<double> lw(inners.size());
    for (std::size_t i = 0; i < inners.size(); ++i) lw[i] = root_lambda * inners[i];
    const double lse = log_sum_exp(lw);
    for (double& w : lw) w -= lse;
    return lw;
}

inline std::vector<double> posterior_mean_from_log_weights(
    std::span<const double> lw, const HypothesisSpace& space) {
    const ProblemConfig& cfg = space.config();
    std::vector<double> mean(cfg.tensor_length(), 0.0);
    const double v = cfg.vertex_value();
    for (std::uint64_t i = 0; i < space.count(); ++i) {
        const double wv = std::exp(lw[i]) * v;
        for_each_support_cell(space.support(i), cfg,
                              [&](std::size_t flat) { mean[flat] += wv; });
    }
    return mean;
}

}  // namespace detail

inline PosteriorSummary compute_posterior(const Observation& y,
                                          const HypothesisSpace& space) {
    detail::require_match(y, space);
    const auto inners = detail::hypothesis_inners(y, space);
    PosteriorSummary out;
    out.log_weights = detail::log_weights_from_inners(inners, y.lambda);
    out.map_index = detail::argmax_first(out.log_weights);
    out.mean = detail::posterior_mean_from_log_weights(out.log_weights, space);
    return out;
}

/// Index of the maximizer of the inner-product statistic <X_i, Y>, ties to
/// the smaller lexicographic index. This is the likelihood maximizer (the
/// quadratic term is hypothesis-independent), and for lambda > 0 it coincides
/// with the posterior mode under the uniform prior.
inline std::uint64_t mle_index(const Observation& y, const HypothesisSpace& space) {
    detail::require_match(y, space);
    const auto inners = detail::hypothesis_inners(y, space);
    return detail::argmax_first(inners);
}

inline SparseSignal mle_estimate(const Observation& y, const HypothesisSpace& space) {
    return space.signal(mle_index(y, space));
}

/// Round the s largest entries of v (ties toward the smaller flat index) to
/// `value`, zeroing the rest.
inline std::vector<double> top_s(std::span<const double> v, std::uint64_t s,
                                 double value) {
    if (s > v.size()) throw std::invalid_argument("top_s: s exceeds length");
    std::vector<std::uint32_t> order(v.size());
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s),
                      order.end(), [&](std::uint32_t a, std::uint32_t b) {
                          if (v[a] != v[b]) return v[a] > v[b];
                          return a < b;
                      });
    std::vector<double> out(v.size(), 0.0);
    for (std::uint64_t i = 0; i < s; ++i) out[order[i]] = value;
    return out;
}

/// The C_{n,s} projection used by the constrained-MMSE characterization:
/// top-s rounding to s^{-1/2}.
inline std::vector<double> top_s(std::span<const double> v, std::uint64_t s) {
    return top_s(v, s, 1.0 / std::sqrt(static_cast<double>(s)));
}

/// Constrained MMSE estimate: top-s rounding of the posterior mean. In
/// FullTensor mode this is exactly Top_s(E[X|Y]) with s = k^d; in
/// UpperTriangular mode the constraint set containing supp(P_n) has s = C(k,d)
/// vertices of height k^{-d/2}, so those replace (s, s^{-1/2}).
inline std::vector<double> cmmse_from_mean(std::span<const double> mean,
                                           const ProblemConfig& cfg) {
    if (cfg.mode == ObservationLayout::FullTensor) {
        return top_s(mean, cfg.sparsity());
    }
    return top_s(mean, cfg.sparsity(), cfg.vertex_value());
}

inline std::vector<double> cmmse_estimate(const Observation& y,
                                          const HypothesisSpace& space) {
    return cmmse_from_mean(compute_posterior(y, space).mean, y.config);
}

/// All four estimators from one inner-product pass. cmap_signal equals
/// mle_signal: the posterior puts no mass outside supp(P_n), so the
/// constrained 0-1-loss optimum is the posterior mode itself.
struct EstimateBundle {
    std::vector<double> mmse_estimate;
    SparseSignal mle_signal;
    std::vector<double> cmmse_estimate;
    SparseSignal cmap_signal;
    std::uint64_t mle_idx = 0;
};

inline EstimateBundle estimate_bundle(const Observation& y,
                                      const HypothesisSpace& space) {
    detail::require_match(y, space);
    const auto inners = detail::hypothesis_inners(y, space);
    const auto lw = detail::log_weights_from_inners(inners, y.lambda);

    EstimateBundle out;
    out.mle_idx = detail::argmax_first(inners);
    out.mle_signal = space.signal(out.mle_idx);
    out.cmap_signal = out.mle_signal;
    out.mmse_estimate = detail::posterior_mean_from_log_weights(lw, space);
    out.cmmse_estimate = cmmse_from_mean(out.mmse_estimate, y.config);
    return out;
}

}  // namespace stpca

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "stpca/model.hpp"
#include "stpca/posterior.hpp"

namespace stpca {
namespace {

ProblemConfig cfg(std::uint32_t p, std::uint32_t k, std::uint32_t d,
                  double beta = 0.0, std::uint64_t seed = 7) {
    ProblemConfig c;
    c.p = p;
    c.k = k;
    c.d = d;
    c.beta = beta;
    c.seed = seed;
    return c;
}

Observation make_obs(const ProblemConfig& c, std::vector<double> data, double lambda) {
    Observation y;
    y.config = c;
    y.data = std::move(data);
    y.lambda = lambda;
    return y;
}

TEST(ComputePosterior, ZeroSnrGivesUniformWeights) {
    const ProblemConfig c = cfg(4, 2, 2, 0.0, 3);
    const HypothesisSpace space = enumerate_supports(c);
    const Observation y = generate_instance(c, 0);
    const PosteriorSummary post = compute_posterior(y, space);
    for (double lw : post.log_weights) {
        EXPECT_NEAR(std::exp(lw), 1.0 / 6.0, 1e-14);
    }
    EXPECT_EQ(post.map_index, 0u);  // all tied, lexicographic
}

TEST(ComputePosterior, P2K1ZeroSnrMeanIsAverageOfHypotheses) {
    const ProblemConfig c = cfg(2, 1, 2);
    const HypothesisSpace space = enumerate_supports(c);
    const Observation y = make_obs(c, {0.3, -0.8, 1.1, 0.2}, 0.0);
    const PosteriorSummary post = compute_posterior(y, space);
    // mean = [[0.5, 0], [0, 0.5]] row-major.
    const std::vector<double> expected = {0.5, 0.0, 0.0, 0.5};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_NEAR(post.mean[i], expected[i], 1e-12);
    }
}

TEST(ComputePosterior, NoiselessLambda25ConcentratesOnTruth) {
    const ProblemConfig c = cfg(4, 2, 2);
    const HypothesisSpace space = enumerate_supports(c);
    const double lambda = 25.0;
    std::vector<double> data = tensorize(SparseSignal{4, 2, {0, 1}}, c);
    for (double& v : data) v *= std::sqrt(lambda);
    const Observation y = make_obs(c, std::move(data), lambda);
    const PosteriorSummary post = compute_posterior(y, space);
    // Log-weight gap to the best competitor is lambda·(1 - (1/2)^2) = 18.75.
    EXPECT_GT(std::exp(post.log_weights[0]), 0.999);
    EXPECT_EQ(post.map_index, 0u);
}

TEST(ComputePosterior, WeightsSumToOneAndMeanInRange) {
    const ProblemConfig c = cfg(6, 2, 2, 1.3, 21);
    const HypothesisSpace space = enumerate_supports(c);
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const Observation y = generate_instance(c, trial);
        const PosteriorSummary post = compute_posterior(y, space);
        double total = 0.0;
        for (double lw : post.log_weights) total += std::exp(lw);
        EXPECT_NEAR(total, 1.0, 1e-10);
        const double v = c.vertex_value();
        for (double e : post.mean) {
            EXPECT_GE(e, -1e-12);
            EXPECT_LE(e, v + 1e-12);
        }
    }
}

TEST(ComputePosterior, RejectsNonFiniteObservations) {
    const ProblemConfig c = cfg(2, 1, 2);
    const HypothesisSpace space = enumerate_supports(c);
    Observation y = make_obs(c, {1.0, std::numeric_limits<double>::quiet_NaN(), 0, 0}, 1.0);
    EXPECT_THROW(compute_posterior(y, space), std::invalid_argument);
    y.data[1] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(compute_posterior(y, space), std::invalid_argument);
}

TEST(ComputePosterior, RejectsConfigMismatch) {
    const HypothesisSpace space = enumerate_supports(cfg(4, 2, 2));
    const Observation y = generate_instance(cfg(5, 2, 2), 0);
    EXPECT_THROW(compute_posterior(y, space), std::invalid_argument);
}

TEST(MleEstimate, NoiselessRecoversThePlant) {
    const ProblemConfig c = cfg(6, 2, 2, 0.8, 31);
    const HypothesisSpace space = enumerate_supports(c);
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        const Observation y = generate_noiseless_instance(c, trial);
        EXPECT_EQ(mle_estimate(y, space).support, y.truth->support);
    }
}

TEST(MleEstimate, HandInstanceP2K1) {
    const ProblemConfig c = cfg(2, 1, 2);
    const HypothesisSpace space = enumerate_supports(c);
    // Y = [[3,0],[0,1]]: inner products 3 vs 1 -> support {0}.
    const Observation y = make_obs(c, {3.0, 0.0, 0.0, 1.0}, 1.0);
    EXPECT_EQ(mle_estimate(y, space).support, (std::vector<std::uint32_t>{0}));
}

TEST(MleEstimate, ZeroSnrCorrectRateIsOneOverM) {
    // Exchangeability forces P[correct] = 1/15 exactly at p=6, k=2.
    const ProblemConfig c = cfg(6, 2, 2, 0.0, 2024);
    const HypothesisSpace space = enumerate_supports(c);
    const std::uint64_t trials = 10'000;
    std::uint64_t correct = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const Observation y = generate_instance(c, t);
        if (mle_estimate(y, space).support == y.truth->support) ++correct;
    }
    const double rate = static_cast<double>(correct) / static_cast<double>(trials);
    const double p0 = 1.0 / 15.0;
    const double se = std::sqrt(p0 * (1 - p0) / static_cast<double>(trials));
    EXPECT_NEAR(rate, p0, 3.0 * se);
}

TEST(TopS, RoundsLargestEntries) {
    const std::vector<double> v = {0.7, 0.6, 0.1, 0.0};
    const std::vector<double> out = top_s(v, 2);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_EQ(out, (std::vector<double>{r, r, 0.0, 0.0}));
}

TEST(TopS, IdempotentOnConstraintSet) {
    const double r = 1.0 / std::sqrt(2.0);
    const std::vector<double> member = {0.0, r, 0.0, r};
    EXPECT_EQ(top_s(member, 2), member);
}

TEST(TopS, TiesBreakTowardSmallerFlatIndex) {
    const std::vector<double> v = {0.5, 0.5, 0.5, 0.0};
    const std::vector<double> out = top_s(v, 2);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_EQ(out, (std::vector<double>{r, r, 0.0, 0.0}));
}

TEST(TopS, RejectsOversizedS) {
    EXPECT_THROW(top_s(std::vector<double>{1.0, 2.0}, 3), std::invalid_argument);
}

TEST(CmmseEstimate, NoiselessHighSnrRecoversTheVertex) {
    const ProblemConfig c = cfg(5, 2, 2, 3.0, 8);
    const HypothesisSpace space = enumerate_supports(c);
    const Observation y = generate_noiseless_instance(c, 1);
    const std::vector<double> est = cmmse_estimate(y, space);
    const std::vector<double> truth = tensorize(*y.truth, c);
    ASSERT_EQ(est.size(), truth.size());
    for (std::size_t i = 0; i < est.size(); ++i) {
        EXPECT_NEAR(est[i], truth[i], 1e-12);
    }
}

TEST(CmmseEstimate, ZeroSnrP2K1TieBreak) {
    const ProblemConfig c = cfg(2, 1, 2);
    const HypothesisSpace space = enumerate_supports(c);
    const Observation y = make_obs(c, {0.0, 0.0, 0.0, 0.0}, 0.0);
    // Top_1 of [[0.5,0],[0,0.5]] -> first maximal cell wins.
    EXPECT_EQ(cmmse_estimate(y, space), (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
}

TEST(CmmseEstimate, AlwaysExactlySVerticesAtHeightRsqrtS) {
    const ProblemConfig c = cfg(5, 2, 2, 0.9, 77);
    const HypothesisSpace space = enumerate_supports(c);
    const double height = 1.0 / std::sqrt(static_cast<double>(c.sparsity()));
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const Observation y = generate_instance(c, trial);
        const std::vector<double> est = cmmse_estimate(y, space);
        std::uint64_t nonzero = 0;
        for (double e : est) {
            if (e != 0.0) {
                EXPECT_EQ(e, height);
                ++nonzero;
            }
        }
        EXPECT_EQ(nonzero, c.sparsity());
    }
}

TEST(TopS, IdempotentOnItsOwnOutputForRandomInputs) {
    Xoshiro256pp rng = derive_stream(404, 1);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 4 + uniform_below(rng, 20);
        const std::uint64_t s = 1 + uniform_below(rng, n);
        std::vector<double> v(n);
        for (double& x : v) x = uniform_open01(rng) - 0.5;
        const std::vector<double> once = top_s(v, s);
        EXPECT_EQ(top_s(once, s), once);
        std::uint64_t nonzero = 0;
        for (double x : once) nonzero += x != 0.0 ? 1 : 0;
        EXPECT_EQ(nonzero, s);
    }
}

TEST(EstimateBundle, ConsistentWithIndividualOperations) {
    const ProblemConfig c = cfg(6, 2, 2, 1.1, 5);
    const HypothesisSpace space = enumerate_supports(c);
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        const Observation y = generate_instance(c, trial);
        const EstimateBundle bundle = estimate_bundle(y, space);
        const PosteriorSummary post = compute_posterior(y, space);
        EXPECT_EQ(bundle.mmse_estimate, post.mean);
        EXPECT_EQ(bundle.mle_signal.support, mle_estimate(y, space).support);
        EXPECT_EQ(bundle.cmap_signal.support, bundle.mle_signal.support);
        EXPECT_EQ(bundle.cmmse_estimate, cmmse_estimate(y, space));
        // MLE/MAP coincidence at lambda > 0.
        EXPECT_EQ(bundle.mle_idx, post.map_index);
    }
}

}  // namespace
}  // namespace stpca

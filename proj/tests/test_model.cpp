#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>
#include "json.hpp"

#include "stpca/model.hpp"
#include "stpca/oracle.hpp"

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

double sq_norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

TEST(ProblemConfig, ValidationNamesTheViolatedBound) {
    EXPECT_THROW(cfg(4, 0, 2).validate(), std::invalid_argument);
    EXPECT_THROW(cfg(4, 5, 2).validate(), std::invalid_argument);
    EXPECT_THROW(cfg(4, 2, 1).validate(), std::invalid_argument);
    EXPECT_THROW(cfg(0, 0, 2).validate(), std::invalid_argument);
    try {
        cfg(4, 0, 2).validate();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("1 <= k <= p"), std::string::npos);
    }
    EXPECT_NO_THROW(cfg(4, 2, 2).validate());
}

TEST(ProblemConfig, LambdaScales) {
    ProblemConfig c = cfg(4, 2, 2, 1.0);
    // M = C(4,2) = 6.
    EXPECT_NEAR(c.lambda_n(), 2.0 * std::log(6.0), 1e-15);
    c.lambda_scale = LambdaScale::LogM;
    EXPECT_NEAR(c.lambda_n(), std::log(6.0), 1e-15);
    c.beta = 0.5;
    EXPECT_NEAR(c.effective_lambda(), 0.5 * std::log(6.0), 1e-15);
}

TEST(ProblemConfig, JsonRoundTripAndUnknownKeyRejection) {
    ProblemConfig c = cfg(12, 3, 2, 0.75, 0xDEADBEEFCAFEULL);
    c.lambda_scale = LambdaScale::LogM;
    nlohmann::json j = c;
    EXPECT_EQ(j.size(), 7u);
    const ProblemConfig back = j.get<ProblemConfig>();
    EXPECT_EQ(back, c);

    nlohmann::json bad = j;
    bad["extra"] = 1;
    EXPECT_THROW(bad.get<ProblemConfig>(), std::invalid_argument);
    nlohmann::json bad_mode = j;
    bad_mode["mode"] = "Diagonal";
    EXPECT_THROW(bad_mode.get<ProblemConfig>(), std::invalid_argument);
}

TEST(EnumerateSupports, P4K2GivesTheSixSupportsInOrder) {
    const HypothesisSpace space = enumerate_supports(cfg(4, 2, 2));
    ASSERT_EQ(space.count(), 6u);
    const std::vector<std::vector<std::uint32_t>> expected = {
        {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (std::uint64_t i = 0; i < space.count(); ++i) {
        const auto s = space.support(i);
        EXPECT_EQ(std::vector<std::uint32_t>(s.begin(), s.end()), expected[i]);
    }
}

TEST(EnumerateSupports, P2K1AndCount) {
    const HypothesisSpace space = enumerate_supports(cfg(2, 1, 2));
    ASSERT_EQ(space.count(), 2u);
    EXPECT_EQ(space.support(0)[0], 0u);
    EXPECT_EQ(space.support(1)[0], 1u);
    EXPECT_EQ(enumerate_supports(cfg(20, 4, 2)).count(), 4845u);
}

TEST(EnumerateSupports, CapRefusesHugeSpaces) {
    try {
        enumerate_supports(cfg(40, 20, 2));
        FAIL() << "expected length_error";
    } catch (const std::length_error& e) {
        EXPECT_NE(std::string(e.what()).find("hypothesis space too large"),
                  std::string::npos);
    }
    // A custom cap applies too.
    EXPECT_THROW(enumerate_supports(cfg(10, 2, 2), 10), std::length_error);
}

TEST(Tensorize, SingleSupportEntryP2K1) {
    const std::vector<double> t =
        tensorize(SparseSignal{2, 1, {0}}, 2, ObservationLayout::FullTensor);
    // Row-major [[1,0],[0,0]].
    EXPECT_EQ(t, (std::vector<double>{1.0, 0.0, 0.0, 0.0}));
}

TEST(Tensorize, HalfValuedBlockP3K2) {
    const std::vector<double> t =
        tensorize(SparseSignal{3, 2, {0, 1}}, 2, ObservationLayout::FullTensor);
    // k^{-d/2} = 1/2 on the four cells {0,1}^2, 0 elsewhere; Frobenius norm 1.
    const std::vector<double> expected = {0.5, 0.5, 0, 0.5, 0.5, 0, 0, 0, 0};
    EXPECT_EQ(t, expected);
    EXPECT_NEAR(sq_norm(t), 1.0, 1e-12);
}

TEST(Tensorize, UnitFrobeniusNormAcrossWholeSpace) {
    for (const auto& c : {cfg(5, 2, 2), cfg(6, 3, 2), cfg(5, 2, 3)}) {
        const HypothesisSpace space = enumerate_supports(c);
        for (std::uint64_t i = 0; i < space.count(); ++i) {
            EXPECT_NEAR(sq_norm(tensorize(space.signal(i), c)), 1.0, 1e-12);
        }
    }
}

TEST(Tensorize, MatchesDenseOracleInBothModes) {
    for (auto mode :
         {ObservationLayout::FullTensor, ObservationLayout::UpperTriangular}) {
        ProblemConfig c = cfg(5, 3, 2);
        c.mode = mode;
        const HypothesisSpace space = enumerate_supports(c);
        for (std::uint64_t i = 0; i < space.count(); ++i) {
            const auto fast = tensorize(space.signal(i), c);
            const auto dense = oracle::dense_tensor(space.support(i), c);
            ASSERT_EQ(fast.size(), dense.size());
            for (std::size_t j = 0; j < fast.size(); ++j) {
                EXPECT_NEAR(fast[j], dense[j], 1e-15);
            }
        }
    }
}

TEST(Tensorize, UpperTriangularNormAndLength) {
    ProblemConfig c = cfg(5, 3, 2);
    c.mode = ObservationLayout::UpperTriangular;
    EXPECT_EQ(c.tensor_length(), 10u);  // C(5,2)
    const auto t = tensorize(SparseSignal{5, 3, {0, 2, 4}}, c);
    // C(3,2) = 3 nonzero cells at value 1/3: norm^2 = 3/9.
    EXPECT_NEAR(sq_norm(t), 3.0 / 9.0, 1e-12);

    // d > k leaves no strictly increasing tuple inside the support.
    ProblemConfig degen = cfg(5, 2, 3);
    degen.mode = ObservationLayout::UpperTriangular;
    const auto z = tensorize(SparseSignal{5, 2, {1, 3}}, degen);
    EXPECT_EQ(sq_norm(z), 0.0);
}

TEST(SignalTensorInner, UnitNormAndOrthogonalityAndAllOnes) {
    const ProblemConfig c = cfg(4, 2, 2);
    Observation y;
    y.config = c;
    y.lambda = 0.0;

    // Y = tensorize(x) for the same support -> 1.
    y.data = tensorize(SparseSignal{4, 2, {0, 1}}, c);
    std::vector<std::uint32_t> same = {0, 1};
    EXPECT_NEAR(signal_tensor_inner(same, y), 1.0, 1e-12);

    // Disjoint supports -> 0.
    std::vector<std::uint32_t> disjoint = {2, 3};
    EXPECT_EQ(signal_tensor_inner(disjoint, y), 0.0);

    // All-ones Y: k^{-1} * k^2 = 2 (four cells at weight 1/2 each).
    y.data.assign(c.tensor_length(), 1.0);
    EXPECT_NEAR(signal_tensor_inner(same, y), 2.0, 1e-12);
}

TEST(SignalTensorInner, UpperTriangularCountsIncreasingTuplesOnly) {
    ProblemConfig c = cfg(4, 3, 2);
    c.mode = ObservationLayout::UpperTriangular;
    Observation y;
    y.config = c;
    y.data.assign(c.tensor_length(), 1.0);  // C(4,2) = 6 entries
    std::vector<std::uint32_t> support = {0, 1, 2};
    // C(3,2) = 3 increasing pairs inside the support, value 1/3 each.
    EXPECT_NEAR(signal_tensor_inner(support, y), 1.0, 1e-12);
}

TEST(GenerateInstance, DeterministicPerConfigAndTrial) {
    const ProblemConfig c = cfg(6, 2, 2, 1.0, 99);
    const Observation a = generate_instance(c, 17);
    const Observation b = generate_instance(c, 17);
    EXPECT_EQ(a.data, b.data);  // bitwise
    EXPECT_EQ(a.truth->support, b.truth->support);
    const Observation other = generate_instance(c, 18);
    EXPECT_NE(a.data, other.data);
}

TEST(GenerateInstance, ZeroSnrIsPureNoise) {
    const ProblemConfig c = cfg(6, 2, 2, 0.0, 5);
    const std::uint64_t trials = 200;
    double total = 0.0;
    std::size_t n = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const Observation y = generate_instance(c, t);
        EXPECT_EQ(y.lambda, 0.0);
        for (double v : y.data) total += v;
        n = y.data.size();
    }
    const double mean = total / static_cast<double>(trials * n);
    EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(static_cast<double>(trials * n)));
}

TEST(GenerateInstance, NoiselessHookIsExactPlant) {
    const ProblemConfig c = cfg(5, 2, 2, 1.2, 11);
    const Observation y = generate_noiseless_instance(c, 3);
    const std::vector<double> expected = [&] {
        auto t = tensorize(*y.truth, c);
        for (double& v : t) v *= std::sqrt(c.effective_lambda());
        return t;
    }();
    ASSERT_EQ(y.data.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_DOUBLE_EQ(y.data[i], expected[i]);
    }
    // Same trial index plants the same truth as the noisy instance.
    EXPECT_EQ(generate_instance(c, 3).truth->support, y.truth->support);
}

TEST(EnumerateSupports, CountMatchesBinomialForRandomShapes) {
    Xoshiro256pp rng = derive_stream(808, 2);
    for (int rep = 0; rep < 30; ++rep) {
        const auto p = static_cast<std::uint32_t>(2 + uniform_below(rng, 11));
        const auto k = static_cast<std::uint32_t>(1 + uniform_below(rng, p));
        const HypothesisSpace space = enumerate_supports(cfg(p, k, 2));
        EXPECT_EQ(space.count(), binomial(p, k));
        // Strictly increasing supports, strictly increasing enumeration.
        for (std::uint64_t i = 0; i < space.count(); ++i) {
            const auto s = space.support(i);
            for (std::size_t j = 0; j + 1 < s.size(); ++j) EXPECT_LT(s[j], s[j + 1]);
            EXPECT_EQ(combination_rank(s, p), i);
        }
    }
}

TEST(GenerateInstance, TruthUniformOverSpace) {
    const ProblemConfig c = cfg(5, 2, 2, 0.0, 123);
    const std::uint64_t trials = 20'000;
    std::vector<std::uint64_t> counts(binomial(5, 2), 0);
    for (std::uint64_t t = 0; t < trials; ++t) {
        const Observation y = generate_instance(c, t);
        ++counts[combination_rank(y.truth->support, c.p)];
    }
    const double expected = static_cast<double>(trials) / 10.0;
    const double tol = 5.0 * std::sqrt(expected);  // ~5 sigma of a Poisson bin
    for (std::uint64_t cnt : counts) {
        EXPECT_NEAR(static_cast<double>(cnt), expected, tol);
    }
}

}  // namespace
}  // namespace stpca

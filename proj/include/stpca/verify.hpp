#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stpca/information.hpp"
#include "stpca/model.hpp"
#include "stpca/oracle.hpp"
#include "stpca/posterior.hpp"

// Executable property suite: every inequality/lemma the library relies on,
// checked against brute-force oracles on fixed small configurations. Runs
// under the CLI `verify` subcommand and inside the test suite; any
// disagreement above tolerance is a build-blocking failure.

namespace stpca::verify {

using oracle::OracleReport;

namespace detail {

inline ProblemConfig make_config(std::uint32_t p, std::uint32_t k, std::uint32_t d,
                                 double beta = 0.0, std::uint64_t seed = 12345) {
    ProblemConfig cfg;
    cfg.p = p;
    cfg.k = k;
    cfg.d = d;
    cfg.beta = beta;
    cfg.seed = seed;
    return cfg;
}

inline const std::vector<ProblemConfig>& small_configs() {
    static const std::vector<ProblemConfig> cfgs = {
        make_config(4, 2, 2), make_config(5, 2, 2), make_config(6, 3, 2),
        make_config(5, 2, 3), make_config(6, 2, 3),
    };
    return cfgs;
}

}  // namespace detail

/// |x^⊗d|_F = 1 for every hypothesis (FullTensor), tolerance 1e-12.
inline OracleReport check_tensor_norms() {
    OracleReport rep;
    rep.name = "tensorize_unit_norm";
    for (const ProblemConfig& cfg : detail::small_configs()) {
        const HypothesisSpace space = enumerate_supports(cfg);
        for (std::uint64_t i = 0; i < space.count(); ++i) {
            const std::vector<double> t = tensorize(space.signal(i), cfg);
            double norm_sq = 0.0;
            for (double v : t) norm_sq += v * v;
            rep.record(oracle::config_digest(cfg, i), 1.0, std::sqrt(norm_sq), 1e-12);
        }
    }
    return rep;
}

/// <x^⊗d, x'^⊗d> = (|S∩S'|/k)^d, via both the dense dot product and the
/// sparse O(k^d) inner-product path, all pairs at p <= 6.
inline OracleReport check_tensor_inner_overlap() {
    OracleReport rep;
    rep.name = "tensorize_inner_overlap";
    for (const ProblemConfig& cfg : detail::small_configs()) {
        const HypothesisSpace space = enumerate_supports(cfg);
        for (std::uint64_t i = 0; i < space.count(); ++i) {
            const std::vector<double> ti = tensorize(space.signal(i), cfg);
            for (std::uint64_t j = i; j < space.count(); ++j) {
                const std::vector<double> tj = tensorize(space.signal(j), cfg);
                std::uint32_t m = 0;
                for (std::uint32_t a : space.support(i)) {
                    for (std::uint32_t b : space.support(j)) m += (a == b) ? 1 : 0;
                }
                const double expected =
                    std::pow(static_cast<double>(m) / cfg.k, static_cast<double>(cfg.d));
                double dot = 0.0;
                for (std::size_t c = 0; c < ti.size(); ++c) dot += ti[c] * tj[c];
                rep.record(oracle::config_digest(cfg, i * space.count() + j), expected,
                           dot, 1e-12);

                Observation as_obs;
                as_obs.config = cfg;
                as_obs.lambda = 0.0;
                as_obs.data = tj;
                const auto si = space.support(i);
                rep.record("sparse:" + oracle::config_digest(cfg, i * space.count() + j),
                           expected, signal_tensor_inner(si, as_obs), 1e-12);
            }
        }
    }
    return rep;
}

/// Minimum squared distance between distinct points of C_{n,s} is 2/s,
/// exhaustively at n <= 10, s <= 4 (the first-moment step of the estimator
/// inequality chain).
inline OracleReport check_constraint_min_distance() {
    OracleReport rep;
    rep.name = "constraint_set_min_distance";
    const std::pair<std::uint32_t, std::uint32_t> cases[] = {
        {6, 2}, {8, 3}, {9, 4}, {10, 4}};
    for (const auto& [n, s] : cases) {
        const double value = 1.0 / std::sqrt(static_cast<double>(s));
        std::vector<std::vector<double>> points;
        auto cells = first_combination(s);
        do {
            std::vector<double> v(n, 0.0);
            for (std::uint32_t c : cells) v[c] = value;
            points.push_back(std::move(v));
        } while (next_combination(cells, n));
        double min_sq = 4.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t j = i + 1; j < points.size(); ++j) {
                min_sq = std::min(min_sq, oracle::dense_sq_dist(points[i], points[j]));
            }
        }
        rep.record("n=" + std::to_string(n) + ",s=" + std::to_string(s),
                   2.0 / static_cast<double>(s), min_sq, 1e-12);
    }
    return rep;
}

/// Posterior weights sum to 1 (1e-10) and the mean stays inside
/// [0, k^{-d/2}] entrywise (1e-12), over random instances.
inline OracleReport check_posterior_normalization() {
    OracleReport rep;
    rep.name = "posterior_normalization";
    for (const ProblemConfig& base : detail::small_configs()) {
        for (double beta : {0.0, 0.7, 1.5}) {
            ProblemConfig cfg = base;
            cfg.beta = beta;
            const HypothesisSpace space = enumerate_supports(cfg);
            for (std::uint64_t trial = 0; trial < 5; ++trial) {
                const Observation y = generate_instance(cfg, trial);
                const PosteriorSummary post = compute_posterior(y, space);
                double total = 0.0;
                for (double lw : post.log_weights) total += std::exp(lw);
                rep.record("sum:" + oracle::config_digest(cfg, trial), 1.0, total, 1e-10);
                const double v = cfg.vertex_value();
                double worst = 0.0;
                for (double e : post.mean) {
                    worst = std::min({worst, e, v - e});
                }
                rep.record("range:" + oracle::config_digest(cfg, trial), 0.0,
                           std::min(worst, 0.0), 1e-12);
            }
        }
    }
    return rep;
}

/// MAP index == argmax of the inner-product statistic on every instance with
/// lambda > 0 (uniform prior), and == argmin of the dense Gaussian residual
/// |Y - sqrt(lambda) X_i|^2.
inline OracleReport check_mle_map_likelihood_forms() {
    OracleReport rep;
    rep.name = "mle_map_likelihood_equivalence";
    for (const ProblemConfig& base : detail::small_configs()) {
        for (double beta : {0.4, 1.0, 1.8}) {
            ProblemConfig cfg = base;
            cfg.beta = beta;
            const HypothesisSpace space = enumerate_supports(cfg);
            for (std::uint64_t trial = 0; trial < 10; ++trial) {
                const Observation y = generate_instance(cfg, trial);
                const PosteriorSummary post = compute_posterior(y, space);
                const std::uint64_t mle = mle_index(y, space);
                rep.record("map:" + oracle::config_digest(cfg, trial),
                           static_cast<double>(post.map_index),
                           static_cast<double>(mle), 0.0);

                const double root_lambda = std::sqrt(y.lambda);
                std::uint64_t best = 0;
                double best_res = 0.0;
                for (std::uint64_t i = 0; i < space.count(); ++i) {
                    const std::vector<double> x = oracle::dense_tensor(space.support(i), cfg);
                    double res = 0.0;
                    for (std::size_t c = 0; c < x.size(); ++c) {
                        const double diff = y.data[c] - root_lambda * x[c];
                        res += diff * diff;
                    }
                    if (i == 0 || res < best_res) {
                        best = i;
                        best_res = res;
                    }
                }
                rep.record("residual:" + oracle::config_digest(cfg, trial),
                           static_cast<double>(best), static_cast<double>(mle), 0.0);
            }
        }
    }
    return rep;
}

/// Top-s recovery: for U in C_{n,s} and V in [0, s^{-1/2}]^n with
/// |U - V|^2 < 1/(2s), top_s(V) = U. Sampled pairs, zero failures expected.
inline OracleReport check_top_s_geometric(std::uint64_t samples_per_case = 100'000) {
    OracleReport rep;
    rep.name = "top_s_geometric_recovery";
    const std::pair<std::uint32_t, std::uint32_t> cases[] = {{9, 4}, {16, 4}, {16, 8}};
    Xoshiro256pp rng = derive_stream(20240101, 0x544F5053ULL);
    for (const auto& [n, s] : cases) {
        const double value = 1.0 / std::sqrt(static_cast<double>(s));
        const double delta_sup = 0.5 / static_cast<double>(s);
        std::vector<double> u(n), w(n), v(n);
        std::vector<std::uint32_t> pool(n);
        for (std::uint64_t it = 0; it < samples_per_case; ++it) {
            for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
            std::fill(u.begin(), u.end(), 0.0);
            for (std::uint32_t i = 0; i < s; ++i) {
                const auto j = i + static_cast<std::uint32_t>(
                                       uniform_below(rng, n - i));
                std::swap(pool[i], pool[j]);
                u[pool[i]] = value;
            }
            // V on the segment from U toward a uniform box point, clipped to a
            // strictly sub-threshold distance.
            for (std::uint32_t i = 0; i < n; ++i) w[i] = uniform_open01(rng) * value;
            const double delta = uniform_open01(rng) * (1.0 - 1e-12) * delta_sup;
            double dist_sq = 0.0;
            for (std::uint32_t i = 0; i < n; ++i) dist_sq += sq(w[i] - u[i]);
            const double scale =
                dist_sq > delta ? std::sqrt(delta / dist_sq) : 1.0;
            for (std::uint32_t i = 0; i < n; ++i) v[i] = u[i] + scale * (w[i] - u[i]);

            const std::vector<double> rounded = top_s(v, s);
            bool equal = true;
            for (std::uint32_t i = 0; i < n; ++i) equal = equal && rounded[i] == u[i];
            ++rep.cases_run;
            if (!equal) {
                rep.failures.push_back(
                    {"n=" + std::to_string(n) + ",s=" + std::to_string(s) +
                         ",iter=" + std::to_string(it),
                     1.0, 0.0});
            }
        }
    }
    return rep;
}

/// compute_posterior mean vs the naive dense-summation oracle, 1e-8.
inline OracleReport check_posterior_mean_against_oracle() {
    OracleReport rep;
    rep.name = "posterior_mean_vs_brute";
    ProblemConfig masked = detail::make_config(5, 3, 2, 0.7);
    masked.mode = ObservationLayout::UpperTriangular;
    const ProblemConfig cases[] = {
        detail::make_config(4, 2, 2, 0.8), detail::make_config(2, 1, 2, 1.0),
        detail::make_config(2, 2, 2, 1.0),  // single hypothesis (p = k)
        detail::make_config(4, 2, 2, 0.0), masked};
    for (const ProblemConfig& cfg : cases) {
        const HypothesisSpace space = enumerate_supports(cfg);
        const std::uint64_t trials = cfg.p == 4 && cfg.beta > 0 ? 50 : 5;
        for (std::uint64_t trial = 0; trial < trials; ++trial) {
            const Observation y = generate_instance(cfg, trial);
            const std::vector<double> fast = compute_posterior(y, space).mean;
            const std::vector<double> brute = oracle::brute_posterior_mean(y, space);
            double gap = 0.0;
            for (std::size_t c = 0; c < fast.size(); ++c) {
                gap = std::max(gap, std::abs(fast[c] - brute[c]));
            }
            rep.record(oracle::config_digest(cfg, trial), 0.0, gap, 1e-8);
        }
    }
    return rep;
}

/// cmmse_estimate achieves the exact constrained minimum risk found by the
/// 126-candidate enumeration (ties allowed: objective values compared).
inline OracleReport check_constrained_argmin_risk(std::uint64_t observations = 200) {
    OracleReport rep;
    rep.name = "cmmse_vs_brute_argmin";
    const ProblemConfig cases[] = {detail::make_config(3, 2, 2, 1.0),
                                   detail::make_config(2, 1, 2, 1.0)};
    for (const ProblemConfig& cfg : cases) {
        const HypothesisSpace space = enumerate_supports(cfg);
        const std::uint64_t trials = cfg.p == 3 ? observations : 20;
        for (std::uint64_t trial = 0; trial < trials; ++trial) {
            const Observation y = generate_instance(cfg, trial);
            const auto brute =
                oracle::brute_constrained_argmin(y, space, cfg.sparsity());
            const std::vector<double> fast = cmmse_estimate(y, space);
            const double fast_risk = oracle::brute_posterior_risk(y, space, fast);
            rep.record(oracle::config_digest(cfg, trial), brute.risk, fast_risk, 1e-12);
        }
    }
    return rep;
}

/// Exact hypergeometric tails vs 10^6 sampled support pairs, 3 binomial
/// stderrs at every attainable threshold.
inline OracleReport check_rate_tail_against_sampling() {
    OracleReport rep;
    rep.name = "rate_tails_vs_sampled_pairs";
    struct Case {
        ProblemConfig cfg;
        std::uint64_t pairs;
    };
    const Case cases[] = {{detail::make_config(4, 2, 2), 1'000'000},
                          {detail::make_config(6, 3, 2), 100'000}};
    for (const auto& [cfg, pairs] : cases) {
        const RateFunction rf = rate_function(cfg);
        const auto mc = oracle::brute_rate_tail(cfg, pairs);
        for (std::size_t m = 0; m < rf.thresholds.size(); ++m) {
            const double exact = std::exp(rf.tail_log_probs[m]);
            const double tol = std::max(3.0 * mc.stderrs[m], 1e-9);
            rep.record("m=" + std::to_string(m) + ":" + oracle::config_digest(cfg, pairs),
                       exact, mc.tails[m], tol);
        }
    }
    return rep;
}

/// Posterior-mean optimality: perturbing the mean (projected to the unit
/// ball) never lowers the conditional risk E[|V - X|^2 | Y].
inline OracleReport check_mean_perturbation_optimality() {
    OracleReport rep;
    rep.name = "posterior_mean_risk_optimality";
    const ProblemConfig cfg = detail::make_config(4, 2, 2, 1.0);
    const HypothesisSpace space = enumerate_supports(cfg);
    Xoshiro256pp rng = derive_stream(777, 0x504552545552ULL);
    GaussianStream gauss(rng);
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const Observation y = generate_instance(cfg, trial);
        const PosteriorSummary post = compute_posterior(y, space);
        const double base_risk = oracle::brute_posterior_risk(y, space, post.mean);
        for (int rep_i = 0; rep_i < 50; ++rep_i) {
            std::vector<double> v = post.mean;
            std::vector<double> dir(v.size());
            double norm = 0.0;
            for (double& x : dir) {
                x = gauss.next();
                norm += x * x;
            }
            norm = std::sqrt(norm);
            const double eps = 0.5 * uniform_open01(rng);
            double v_norm_sq = 0.0;
            for (std::size_t c = 0; c < v.size(); ++c) {
                v[c] += eps * dir[c] / norm;
                v_norm_sq += v[c] * v[c];
            }
            if (v_norm_sq > 1.0) {
                const double shrink = 1.0 / std::sqrt(v_norm_sq);
                for (double& x : v) x *= shrink;
            }
            const double risk = oracle::brute_posterior_risk(y, space, v);
            rep.record(oracle::config_digest(cfg, trial * 100 + rep_i), 0.0,
                       std::min(risk - base_risk, 0.0), 1e-12);
        }
    }
    return rep;
}

inline std::vector<OracleReport> run_verification_suite() {
    return {check_tensor_norms(),
            check_tensor_inner_overlap(),
            check_constraint_min_distance(),
            check_posterior_normalization(),
            check_mle_map_likelihood_forms(),
            check_top_s_geometric(),
            check_posterior_mean_against_oracle(),
            check_constrained_argmin_risk(),
            check_rate_tail_against_sampling(),
            check_mean_perturbation_optimality()};
}

/// Runs the suite and prints one line per check; returns 0 if everything
/// passed, 2 otherwise (the CLI's property-suite failure code).
inline int verify_main(bool json, std::ostream& out) {
    const std::vector<OracleReport> reports = run_verification_suite();
    bool all_ok = true;
    for (const OracleReport& rep : reports) {
        all_ok = all_ok && rep.passed();
        if (json) {
            nlohmann::json j = rep;
            out << j.dump() << "\n";
        } else {
            out << (rep.passed() ? "PASS" : "FAIL") << "  " << rep.name << "  (cases="
                << rep.cases_run << ", max|err|=" << rep.max_abs_discrepancy << ")\n";
        }
    }
    return all_ok ? 0 : 2;
}

}  // namespace stpca::verify

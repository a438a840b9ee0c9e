#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "stpca/model.hpp"
#include "stpca/numeric.hpp"
#include "stpca/posterior.hpp"
#include "stpca/version.hpp"

namespace stpca {

/// One Monte-Carlo trial: exact-recovery indicator for the MLE and squared
/// errors of the posterior mean and its constrained rounding against the
/// planted truth.
struct TrialRecord {
    bool mle_correct = false;
    double sq_err_mmse = 0.0;
    double sq_err_cmmse = 0.0;
};

/// Score an observation with an attached truth: computes all estimators and
/// measures exact recovery / squared errors against the plant.
inline TrialRecord score_trial(const Observation& y, const HypothesisSpace& space) {
    if (!y.truth) throw std::invalid_argument("score_trial: observation has no truth");
    const EstimateBundle est = estimate_bundle(y, space);
    const std::vector<double> truth = tensorize(*y.truth, y.config);

    TrialRecord rec;
    rec.mle_correct = est.mle_signal.support == y.truth->support;
    double acc_mmse = 0.0, acc_cmmse = 0.0;
    for (std::size_t c = 0; c < truth.size(); ++c) {
        acc_mmse += sq(est.mmse_estimate[c] - truth[c]);
        acc_cmmse += sq(est.cmmse_estimate[c] - truth[c]);
    }
    rec.sq_err_mmse = acc_mmse;
    rec.sq_err_cmmse = acc_cmmse;
    return rec;
}

inline TrialRecord run_trial(const ProblemConfig& config,
                             const HypothesisSpace& space,
                             std::uint64_t trial_index) {
    return score_trial(generate_instance(config, trial_index), space);
}

inline TrialRecord run_trial(const ProblemConfig& config, std::uint64_t trial_index) {
    return run_trial(config, enumerate_supports(config), trial_index);
}

/// Point estimates at one beta. mep == cmep identically (the constrained MAP
/// collapses to the MLE); risks live in their analytic ranges
/// (probabilities in [0,1], squared errors in [0,2]).
struct RiskEstimate {
    double beta = 0.0;
    double mep = 0.0, cmep = 0.0, mmse = 0.0, cmmse = 0.0;
    double mep_se = 0.0, cmep_se = 0.0, mmse_se = 0.0, cmmse_se = 0.0;
    std::uint64_t trials = 0;
};

/// Per-beta margins for the estimator-inequality chain, each with the
/// stderr propagated from the point estimates:
///   markov:      (s/2)·CMMSE - CMEP >= 0
///   pz_cmep:     CMEP - CMMSE^2/4  >= 0
///   pz_mep:      MEP  - MMSE^2/4   >= 0
///   transfer:    CMMSE < 4·eps·s whenever MMSE < eps, checked at
///                eps = mmse + 3·mmse_se.
struct InequalityMargins {
    double beta = 0.0;
    double markov_margin = 0.0, markov_sigma = 0.0;
    double pz_cmep_margin = 0.0, pz_cmep_sigma = 0.0;
    double pz_mep_margin = 0.0, pz_mep_sigma = 0.0;
    double transfer_margin = 0.0, transfer_sigma = 0.0;
};

struct SweepMetadata {
    std::string software = std::string(kSoftwareName) + " " + kSoftwareVersion;
    std::string rng_name = kRngName;
    std::string rng_version = kRngVersion;
    std::string lambda_scale;
    double wall_seconds = 0.0;  // in-memory only; never serialized
};

struct SweepResult {
    ProblemConfig base_config;  // beta field unused (grid below)
    std::vector<double> beta_grid;
    std::vector<RiskEstimate> estimates;
    std::vector<InequalityMargins> inequality_report;
    SweepMetadata metadata;
};

inline std::vector<double> linear_grid(double lo, double hi, std::size_t steps) {
    if (steps < 1) throw std::invalid_argument("grid: steps must be >= 1");
    if (steps == 1) return {lo};
    std::vector<double> g(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
    return g;
}

inline std::vector<double> log_spaced_grid(double lo, double hi, std::size_t steps) {
    if (!(lo > 0.0) || !(hi >= lo)) {
        throw std::invalid_argument("grid: log spacing needs 0 < lo <= hi");
    }
    auto g = linear_grid(std::log(lo), std::log(hi), steps);
    for (double& v : g) v = std::exp(v);
    return g;
}

namespace detail {

inline MeanStderr summarize_member(const std::vector<TrialRecord>& recs,
                                   double (*proj)(const TrialRecord&)) {
    std::vector<double> vals(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) vals[i] = proj(recs[i]);
    return summarize(vals);
}

}  // namespace detail

/// Monte-Carlo risk sweep over a strictly increasing beta grid. Trials are
/// distributed over `threads` workers into a slot-per-trial buffer and reduced
/// sequentially in trial order, so the result is bitwise independent of the
/// worker count. Per-trial streams depend on (seed, trial_index) only, making
/// the grid points share trial noise (common random numbers).
inline SweepResult sweep(const ProblemConfig& base_config,
                         std::span<const double> beta_grid,
                         std::uint64_t trials_per_beta, unsigned threads = 1) {
    base_config.validate();
    if (beta_grid.empty()) throw std::invalid_argument("sweep: empty beta grid");
    for (std::size_t i = 0; i + 1 < beta_grid.size(); ++i) {
        if (!(beta_grid[i] < beta_grid[i + 1])) {
            throw std::invalid_argument("sweep: beta grid must be strictly increasing");
        }
    }
    if (!(beta_grid.front() >= 0.0)) {
        throw std::invalid_argument("sweep: betas must be nonnegative");
    }
    if (trials_per_beta < 2) throw std::invalid_argument("sweep: trials must be >= 2");
    if (threads == 0) threads = 1;

    const auto t0 = std::chrono::steady_clock::now();
    SweepResult result;
    result.base_config = base_config;
    result.beta_grid.assign(beta_grid.begin(), beta_grid.end());
    result.metadata.lambda_scale = to_string(base_config.lambda_scale);

    const double s = static_cast<double>(base_config.sparsity());
    for (double beta : beta_grid) {
        ProblemConfig cfg = base_config;
        cfg.beta = beta;
        const HypothesisSpace space = enumerate_supports(cfg);

        std::vector<TrialRecord> recs(trials_per_beta);
        std::atomic<std::uint64_t> next{0};
        std::exception_ptr worker_error;
        std::mutex error_mutex;
        auto worker = [&]() {
            try {
                for (;;) {
                    const std::uint64_t t = next.fetch_add(1);
                    if (t >= trials_per_beta) return;
                    recs[t] = run_trial(cfg, space, t);
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!worker_error) worker_error = std::current_exception();
            }
        };
        if (threads == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(threads);
            for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        if (worker_error) std::rethrow_exception(worker_error);

        const MeanStderr err = detail::summarize_member(recs, [](const TrialRecord& r) {
            return r.mle_correct ? 0.0 : 1.0;
        });
        const MeanStderr mmse = detail::summarize_member(recs, [](const TrialRecord& r) {
            return r.sq_err_mmse;
        });
        const MeanStderr cmmse = detail::summarize_member(recs, [](const TrialRecord& r) {
            return r.sq_err_cmmse;
        });

        RiskEstimate est;
        est.beta = beta;
        est.trials = trials_per_beta;
        est.mep = est.cmep = err.mean;
        est.mep_se = est.cmep_se = err.stderr_;
        est.mmse = mmse.mean;
        est.mmse_se = mmse.stderr_;
        est.cmmse = cmmse.mean;
        est.cmmse_se = cmmse.stderr_;
        result.estimates.push_back(est);

        InequalityMargins ineq;
        ineq.beta = beta;
        ineq.markov_margin = 0.5 * s * est.cmmse - est.cmep;
        ineq.markov_sigma = std::sqrt(sq(0.5 * s * est.cmmse_se) + sq(est.cmep_se));
        ineq.pz_cmep_margin = est.cmep - 0.25 * sq(est.cmmse);
        ineq.pz_cmep_sigma =
            std::sqrt(sq(est.cmep_se) + sq(0.5 * est.cmmse * est.cmmse_se));
        ineq.pz_mep_margin = est.mep - 0.25 * sq(est.mmse);
        ineq.pz_mep_sigma =
            std::sqrt(sq(est.mep_se) + sq(0.5 * est.mmse * est.mmse_se));
        const double eps = est.mmse + 3.0 * est.mmse_se;
        ineq.transfer_margin = 4.0 * eps * s - est.cmmse;
        ineq.transfer_sigma = est.cmmse_se;
        result.inequality_report.push_back(ineq);
    }
    result.metadata.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

namespace detail {

/// %.17g formatting via to_chars: locale-independent and byte-reproducible.
inline std::string format_g17(double v) {
    char buf[64];
    const auto res =
        std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline constexpr const char* kCsvHeader =
    "beta,mep,mep_se,cmep,cmep_se,mmse,mmse_se,cmmse,cmmse_se,trials";

inline void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_csv: cannot open " + path.string());
    out << kCsvHeader << "\n";
    for (const RiskEstimate& e : result.estimates) {
        out << detail::format_g17(e.beta) << ',' << detail::format_g17(e.mep) << ','
            << detail::format_g17(e.mep_se) << ',' << detail::format_g17(e.cmep)
            << ',' << detail::format_g17(e.cmep_se) << ','
            << detail::format_g17(e.mmse) << ',' << detail::format_g17(e.mmse_se)
            << ',' << detail::format_g17(e.cmmse) << ','
            << detail::format_g17(e.cmmse_se) << ',' << e.trials << "\n";
    }
    if (!out) throw std::runtime_error("emit_csv: write failed for " + path.string());
}

/// Sidecar metadata: full config (minus the unused beta field), grid, RNG
/// identity, inequality margins, software version. Wall time is deliberately
/// absent so reruns are byte-identical.
inline nlohmann::json meta_json(const SweepResult& result) {
    nlohmann::json cfg{{"p", result.base_config.p},
                       {"k", result.base_config.k},
                       {"d", result.base_config.d},
                       {"mode", to_string(result.base_config.mode)},
                       {"lambda_scale", to_string(result.base_config.lambda_scale)},
                       {"seed", result.base_config.seed}};
    nlohmann::json ineq = nlohmann::json::array();
    for (const auto& m : result.inequality_report) {
        ineq.push_back({{"beta", m.beta},
                        {"markov_margin", m.markov_margin},
                        {"markov_sigma", m.markov_sigma},
                        {"pz_cmep_margin", m.pz_cmep_margin},
                        {"pz_cmep_sigma", m.pz_cmep_sigma},
                        {"pz_mep_margin", m.pz_mep_margin},
                        {"pz_mep_sigma", m.pz_mep_sigma},
                        {"transfer_margin", m.transfer_margin},
                        {"transfer_sigma", m.transfer_sigma}});
    }
    return nlohmann::json{{"config", cfg},
                          {"beta_grid", result.beta_grid},
                          {"trials_per_beta",
                           result.estimates.empty() ? 0 : result.estimates[0].trials},
                          {"rng", {{"name", result.metadata.rng_name},
                                   {"version", result.metadata.rng_version}}},
                          {"lambda_scale", result.metadata.lambda_scale},
                          {"inequality_report", ineq},
                          {"software_version", result.metadata.software}};
}

inline void emit_meta_json(const SweepResult& result,
                           const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_meta_json: cannot open " + path.string());
    out << meta_json(result).dump(2) << "\n";
    if (!out) {
        throw std::runtime_error("emit_meta_json: write failed for " + path.string());
    }
}

/// Inverse of emit_csv (strict header, strict field count).
inline std::vector<RiskEstimate> parse_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("parse_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw std::runtime_error("parse_csv: bad header in " + path.string());
    }
    std::vector<RiskEstimate> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 10) {
            throw std::runtime_error("parse_csv: expected 10 fields, got " +
                                     std::to_string(fields.size()));
        }
        auto num = [&](std::size_t i) {
            double v = 0.0;
            const auto res =
                std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), v);
            if (res.ec != std::errc{}) {
                throw std::runtime_error("parse_csv: bad number '" + fields[i] + "'");
            }
            return v;
        };
        RiskEstimate e;
        e.beta = num(0);
        e.mep = num(1);
        e.mep_se = num(2);
        e.cmep = num(3);
        e.cmep_se = num(4);
        e.mmse = num(5);
        e.mmse_se = num(6);
        e.cmmse = num(7);
        e.cmmse_se = num(8);
        e.trials = static_cast<std::uint64_t>(num(9));
        rows.push_back(e);
    }
    return rows;
}

}  // namespace stpca

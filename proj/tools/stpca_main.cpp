// Command-line front end: Monte-Carlo risk sweeps, rate-function reports,
// KL curves, I-MMSE consistency checks, and the property/oracle suite.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "stpca/stpca.hpp"

namespace {

struct CommonFlags {
    std::uint32_t p = 12;
    std::uint32_t k = 2;
    std::uint32_t d = 2;
    std::uint64_t seed = 1;
    std::string lambda_scale = "TwoLogM";
    std::string mode = "FullTensor";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--p", f.p, "ambient vector dimension");
    cmd->add_option("--k", f.k, "support size (1 <= k <= p)");
    cmd->add_option("--d", f.d, "tensor order (>= 2)");
    cmd->add_option("--seed", f.seed, "64-bit RNG seed");
    cmd->add_option("--lambda-scale", f.lambda_scale,
                    "critical snr definition: TwoLogM | LogM");
    cmd->add_option("--mode", f.mode,
                    "observation layout: FullTensor | UpperTriangular");
}

stpca::ProblemConfig to_config(const CommonFlags& f) {
    stpca::ProblemConfig cfg;
    cfg.p = f.p;
    cfg.k = f.k;
    cfg.d = f.d;
    cfg.seed = f.seed;
    if (f.lambda_scale == "TwoLogM" || f.lambda_scale == "twologm") {
        cfg.lambda_scale = stpca::LambdaScale::TwoLogM;
    } else if (f.lambda_scale == "LogM" || f.lambda_scale == "logm") {
        cfg.lambda_scale = stpca::LambdaScale::LogM;
    } else {
        throw std::invalid_argument("--lambda-scale must be TwoLogM or LogM");
    }
    if (f.mode == "FullTensor" || f.mode == "full") {
        cfg.mode = stpca::ObservationLayout::FullTensor;
    } else if (f.mode == "UpperTriangular" || f.mode == "upper") {
        cfg.mode = stpca::ObservationLayout::UpperTriangular;
    } else {
        throw std::invalid_argument("--mode must be FullTensor or UpperTriangular");
    }
    cfg.validate();
    if (cfg.mode == stpca::ObservationLayout::UpperTriangular && cfg.d > cfg.k) {
        std::cerr << "warning: UpperTriangular with d > k has an all-zero planted "
                     "tensor\n";
    }
    return cfg;
}

std::vector<double> make_grid(double lo, double hi, std::size_t steps,
                              const std::string& spacing) {
    if (spacing == "log") return stpca::log_spaced_grid(lo, hi, steps);
    if (spacing == "linear") return stpca::linear_grid(lo, hi, steps);
    throw std::invalid_argument("--spacing must be log or linear");
}

void write_or_print(const nlohmann::json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse tensor-PCA estimation laboratory"};
    app.require_subcommand(1);

    // --- sweep ---
    CommonFlags sweep_flags;
    double beta_min = 0.25, beta_max = 2.0;
    std::size_t beta_steps = 8;
    std::uint64_t trials = 500;
    std::string sweep_out = "sweep.csv";
    std::string spacing = "log";
    unsigned threads = 1;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "Monte-Carlo risk sweep over a beta grid");
    add_common(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--beta-min", beta_min, "smallest normalized snr");
    sweep_cmd->add_option("--beta-max", beta_max, "largest normalized snr");
    sweep_cmd->add_option("--beta-steps", beta_steps, "number of grid points");
    sweep_cmd->add_option("--trials", trials, "Monte-Carlo trials per grid point");
    sweep_cmd->add_option("--out", sweep_out, "CSV output path (meta JSON sidecar)");
    sweep_cmd->add_option("--spacing", spacing, "grid spacing: log | linear");
    sweep_cmd->add_option("--threads", threads,
                          "worker threads (results are worker-count independent)");

    // --- rate ---
    CommonFlags rate_flags;
    double rate_constant = stpca::kRateBoundConstant;
    std::string rate_out;
    bool calibrate = false;
    CLI::App* rate_cmd =
        app.add_subcommand("rate", "exact overlap rate function and bound margins");
    add_common(rate_cmd, rate_flags);
    rate_cmd->add_option("--rate-constant", rate_constant,
                         "constant C in the sqrt(t) - C/lambda_n bound");
    rate_cmd->add_option("--out", rate_out, "JSON output path (default stdout)");
    rate_cmd->add_flag("--calibrate", calibrate,
                       "scan the acceptance grid and print the smallest C making "
                       "all sqrt-curve margins nonnegative");

    // --- kl ---
    CommonFlags kl_flags;
    double kl_min = 0.0, kl_max = 2.0;
    std::size_t kl_steps = 8;
    std::uint64_t kl_samples = 10'000;
    std::string kl_spacing = "linear";
    std::string kl_out;
    CLI::App* kl_cmd = app.add_subcommand(
        "kl", "Monte-Carlo KL divergence D(Q_beta || Q_0)/lambda_n over a beta grid");
    add_common(kl_cmd, kl_flags);
    kl_cmd->add_option("--beta-min", kl_min, "smallest beta");
    kl_cmd->add_option("--beta-max", kl_max, "largest beta");
    kl_cmd->add_option("--beta-steps", kl_steps, "number of grid points");
    kl_cmd->add_option("--samples", kl_samples, "samples per grid point");
    kl_cmd->add_option("--spacing", kl_spacing, "grid spacing: log | linear");
    kl_cmd->add_option("--out", kl_out, "JSON output path (default stdout)");

    // --- immse ---
    CommonFlags immse_flags;
    double immse_beta = 1.0, immse_h = 0.1;
    std::uint64_t immse_samples = 20'000;
    std::string immse_out;
    CLI::App* immse_cmd = app.add_subcommand(
        "immse", "I-MMSE consistency: direct posterior risk vs KL finite difference");
    add_common(immse_cmd, immse_flags);
    immse_cmd->add_option("--beta", immse_beta, "normalized snr (beta - h >= 0)");
    immse_cmd->add_option("--step", immse_h, "central finite-difference step h");
    immse_cmd->add_option("--samples", immse_samples, "samples per estimate");
    immse_cmd->add_option("--out", immse_out, "JSON output path (default stdout)");

    // --- verify ---
    bool verify_json = false;
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "run the property/oracle suites");
    verify_cmd->add_flag("--json", verify_json, "emit OracleReport JSON lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sweep_cmd->parsed()) {
            const stpca::ProblemConfig cfg = to_config(sweep_flags);
            const std::vector<double> grid =
                make_grid(beta_min, beta_max, beta_steps, spacing);
            const stpca::SweepResult result = stpca::sweep(cfg, grid, trials, threads);
            stpca::emit_csv(result, sweep_out);
            stpca::emit_meta_json(result, sweep_out + ".meta.json");
            std::cout << "wrote " << sweep_out << " and " << sweep_out
                      << ".meta.json (" << result.estimates.size() << " grid points, "
                      << trials << " trials each, " << result.metadata.wall_seconds
                      << " s)\n";
        } else if (rate_cmd->parsed()) {
            const stpca::ProblemConfig cfg = to_config(rate_flags);
            if (calibrate) {
                double required = 0.0;
                for (std::uint32_t p = 10; p <= 20; ++p) {
                    for (std::uint32_t k : {2u, 3u}) {
                        for (std::uint32_t d : {2u, 3u}) {
                            stpca::ProblemConfig c = cfg;
                            c.p = p;
                            c.k = k;
                            c.d = d;
                            const auto rf = stpca::rate_function(c);
                            const double lambda_n = c.lambda_n();
                            for (std::size_t m = 1; m < rf.thresholds.size(); ++m) {
                                const double need =
                                    lambda_n * (std::sqrt(rf.thresholds[m]) -
                                                rf.rate_values[m]);
                                required = std::max(required, need);
                            }
                        }
                    }
                }
                std::cout << "smallest admissible C over the grid: " << required
                          << "\n";
                return 0;
            }
            const stpca::RateFunction rf = stpca::rate_function(cfg);
            const auto check =
                stpca::check_rate_hypotheses(rf, cfg.lambda_n(), rate_constant);
            write_or_print(stpca::to_report_json(rf, check), rate_out);
        } else if (kl_cmd->parsed()) {
            const stpca::ProblemConfig cfg = to_config(kl_flags);
            const std::vector<double> grid =
                make_grid(kl_min, kl_max, kl_steps, kl_spacing);
            const stpca::KlCurve curve = stpca::kl_curve(cfg, grid, kl_samples);
            write_or_print(stpca::to_report_json(curve), kl_out);
        } else if (immse_cmd->parsed()) {
            const stpca::ProblemConfig cfg = to_config(immse_flags);
            const stpca::ImmseReport rep =
                stpca::i_mmse_check(cfg, immse_beta, immse_h, immse_samples);
            write_or_print(stpca::to_report_json(rep, cfg), immse_out);
        } else if (verify_cmd->parsed()) {
            return stpca::verify::verify_main(verify_json, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

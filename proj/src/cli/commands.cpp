#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sginfer/cli.hpp"
#include "sginfer/csv.hpp"
#include "sginfer/errors.hpp"
#include "sginfer/highdim.hpp"
#include "sginfer/inference.hpp"
#include "sginfer/kernels.hpp"
#include "sginfer/rng.hpp"
#include "sginfer/timeseries.hpp"

namespace sginfer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

void apply_isa(ResolvedConfig& cfg) {
    if (!kernels::set_backend_by_name(cfg.isa)) {
        throw config_error("kernel backend '" + cfg.isa + "' is not supported on this CPU");
    }
    cfg.isa = std::string(kernels::backend_name(kernels::active_backend()));
}

Dataset load_data(const ResolvedConfig& cfg) {
    if (!cfg.data_path.empty()) return dataset_from_csv(cfg.data_path);
    if (cfg.preset_name.empty()) {
        throw config_error("no input: pass --preset or --data <csv>");
    }
    return cfg.preset.generate(cfg.seed);
}

void write_manifest(const ResolvedConfig& cfg, const CommandResult& result, double wall_s) {
    json j;
    j["command"] = cfg.command;
    j["tool_version"] = kToolVersion;
    j["master_seed"] = cfg.seed;
    j["config"] = json::parse(resolved_to_json(cfg));
    j["outputs"] = result.outputs;
    j["wall_time_s"] = wall_s;
    csv::write_file((fs::path(cfg.out_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

std::string ci_table_csv(const ConfidenceIntervals& ci) {
    std::string out = "coord,center,lower,upper\n";
    for (std::size_t j = 0; j < ci.center.size(); ++j) {
        out += std::to_string(j + 1) + ',' + csv::format_double(ci.center[j]) + ',' +
               csv::format_double(ci.lower[j]) + ',' + csv::format_double(ci.upper[j]) + '\n';
    }
    return out;
}

std::string replicates_csv(const InferenceRun& run) {
    const bool blocks = !run.block_starts.empty();
    const std::size_t p = run.replicates.empty() ? 0 : run.replicates[0].scaled.size();
    std::string out = "t,rho_t";
    if (blocks) out += ",block_start";
    for (std::size_t j = 1; j <= p; ++j) out += ",g" + std::to_string(j);
    out += '\n';
    for (std::size_t t = 0; t < run.replicates.size(); ++t) {
        const Replicate& rep = run.replicates[t];
        out += std::to_string(t) + ',' + csv::format_double(rep.rho_t);
        if (blocks) out += ',' + std::to_string(run.block_starts[t]);
        for (std::size_t j = 0; j < p; ++j) out += ',' + csv::format_double(rep.scaled[j]);
        out += '\n';
    }
    return out;
}

std::string matrix_csv(const Mat& m) {
    std::string out;
    for (std::size_t j = 1; j <= m.cols; ++j) {
        if (j > 1) out += ',';
        out += "c" + std::to_string(j);
    }
    out += '\n';
    for (std::size_t r = 0; r < m.rows; ++r) csv::append_row(out, m.row(r), m.cols);
    return out;
}

CommandResult infer_like(const ResolvedConfig& cfg, bool force_timeseries) {
    Dataset data = load_data(cfg);
    InferMethod method = cfg.preset.method;
    if (!cfg.method.empty()) method = method_from_name(cfg.method);
    if (force_timeseries) method = InferMethod::Timeseries;

    ExperimentPreset preset = cfg.preset;
    preset.lag = cfg.lag;
    preset.level = cfg.level;
    PipelineResult pipe = run_pipeline(preset, data, method, cfg.seed);
    ConfidenceIntervals ci = confidence_intervals(pipe.center, pipe.cov, data.n, cfg.level);

    CommandResult result;
    fs::create_directories(cfg.out_dir);
    csv::write_file((fs::path(cfg.out_dir) / "ci.csv").string(), ci_table_csv(ci));
    result.outputs.push_back("ci.csv");
    if (pipe.has_run) {
        csv::write_file((fs::path(cfg.out_dir) / "replicates.csv").string(),
                        replicates_csv(pipe.run));
        result.outputs.push_back("replicates.csv");
    }
    csv::write_file((fs::path(cfg.out_dir) / "covariance.csv").string(),
                    matrix_csv(pipe.cov.matrix));
    result.outputs.push_back("covariance.csv");
    if (cfg.oracle && method != InferMethod::Oracle) {
        std::vector<double> zero(data.p, 0.0);
        std::vector<double> theta_hat = exact_solver(preset.loss, data, zero);
        CovarianceEstimate plug = plugin_sandwich_lowdim(preset.loss, data, theta_hat);
        csv::write_file((fs::path(cfg.out_dir) / "covariance_plugin.csv").string(),
                        matrix_csv(plug.matrix));
        result.outputs.push_back("covariance_plugin.csv");
    }
    return result;
}

}  // namespace

CommandResult cmd_infer(const ResolvedConfig& cfg) { return infer_like(cfg, false); }

CommandResult cmd_coverage(const ResolvedConfig& cfg) {
    if (cfg.preset_name.empty()) throw config_error("coverage requires --preset");
    InferMethod method = cfg.preset.method;
    if (!cfg.method.empty()) method = method_from_name(cfg.method);
    ExperimentPreset preset = cfg.preset;
    preset.lag = cfg.lag;
    preset.level = cfg.level;
    const std::size_t sims = cfg.sims ? cfg.sims : preset.n_sims;
    CoverageReport rep = coverage_simulation(preset, sims, cfg.seed, method, cfg.parallel);

    json j;
    j["preset"] = rep.preset;
    j["method"] = rep.method;
    j["n_sims"] = rep.n_sims;
    j["coverage"] = rep.coverage;
    j["avg_length"] = rep.avg_length;
    j["failures"] = rep.failures;
    j["seed"] = rep.seed;

    CommandResult result;
    fs::create_directories(cfg.out_dir);
    csv::write_file((fs::path(cfg.out_dir) / "coverage.json").string(), j.dump(2) + "\n");
    result.outputs.push_back("coverage.json");
    return result;
}

CommandResult cmd_highdim(const ResolvedConfig& cfg) {
    Dataset data = load_data(cfg);
    HighDimConfig hd = cfg.preset.highdim;
    hd.seed = Rng::derive_seed(cfg.seed, 0x4d);

    double lambda = hd.lambda;
    double omega = hd.omega;
    if (lambda <= 0.0 || omega <= 0.0) {
        double sigma_hat = cfg.sigma_hat;
        double l1_hat = cfg.l1_hat;
        if (sigma_hat < 0.0 || l1_hat < 0.0) {
            auto [s, l] = cv_lasso_scale_estimates(data, Rng::derive_seed(cfg.seed, 0xcf));
            if (sigma_hat < 0.0) sigma_hat = s;
            if (l1_hat < 0.0) l1_hat = l;
        }
        HyperParams hp = default_hyperparams(data, sigma_hat, l1_hat, hd.dense_limit);
        if (lambda <= 0.0) lambda = hp.lambda;
        if (omega <= 0.0) omega = hp.omega;
    }

    SoftThresholdCov cov(data, omega, hd.dense_limit);
    std::vector<double> zero(data.p, 0.0);
    std::vector<double> theta_hat = prox_svrg_point_estimate(data, cov, lambda, hd, zero);

    CommandResult result;
    fs::create_directories(cfg.out_dir);

    if (cfg.with_replicates) {
        auto [run, theta_opt] = highdim_inference(data, cov, lambda, hd, theta_hat);
        csv::write_file((fs::path(cfg.out_dir) / "replicates.csv").string(), replicates_csv(run));
        result.outputs.push_back("replicates.csv");
    }

    DebiasMode mode = data.p <= hd.dense_limit ? DebiasMode::ExactDense : DebiasMode::Svrg;
    if (cfg.debias_mode == "exact") mode = DebiasMode::ExactDense;
    if (cfg.debias_mode == "svrg") mode = DebiasMode::Svrg;
    DebiasedEstimate est = debiased_estimator(data, theta_hat, cov, mode, hd);

    std::string out = "coord,theta_hat,theta_d,se,z,pvalue\n";
    for (std::size_t j = 0; j < data.p; ++j) {
        const double se = std::sqrt(est.variance[j]);
        const double z = se > 0.0 ? est.theta_d[j] / se : 0.0;
        const double pv = se > 0.0 ? 2.0 * (1.0 - normal_cdf(std::fabs(z)))
                                   : (est.theta_d[j] == 0.0 ? 1.0 : 0.0);
        out += std::to_string(j + 1) + ',' + csv::format_double(est.theta_hat[j]) + ',' +
               csv::format_double(est.theta_d[j]) + ',' + csv::format_double(se) + ',' +
               csv::format_double(z) + ',' + csv::format_double(pv) + '\n';
    }
    csv::write_file((fs::path(cfg.out_dir) / "debias.csv").string(), out);
    result.outputs.push_back("debias.csv");

    json meta;
    meta["lambda"] = lambda;
    meta["omega"] = omega;
    meta["storage"] = cov.storage() == SoftThresholdCov::Mode::Dense    ? "dense"
                      : cov.storage() == SoftThresholdCov::Mode::Sparse ? "sparse"
                                                                        : "implicit";
    csv::write_file((fs::path(cfg.out_dir) / "hyperparams.json").string(), meta.dump(2) + "\n");
    result.outputs.push_back("hyperparams.json");
    return result;
}

CommandResult run_command(const ResolvedConfig& cfg_in) {
    ResolvedConfig cfg = cfg_in;
    apply_isa(cfg);
    const auto start = std::chrono::steady_clock::now();
    CommandResult result;
    if (cfg.command == "infer") {
        result = cmd_infer(cfg);
    } else if (cfg.command == "timeseries") {
        result = infer_like(cfg, true);
    } else if (cfg.command == "coverage") {
        result = cmd_coverage(cfg);
    } else if (cfg.command == "highdim") {
        result = cmd_highdim(cfg);
    } else {
        throw config_error("unknown command: " + cfg.command);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(cfg, result, wall);
    return result;
}

CommandResult cmd_rerun(const std::string& manifest_path, const std::string& out_override) {
    std::string command;
    auto overrides = overrides_from_manifest(manifest_path, command);
    if (!out_override.empty()) overrides["out"] = out_override;
    ResolvedConfig cfg = parse_config(command, "", overrides);
    return run_command(cfg);
}

}  // namespace sginfer::cli

#include <cstdio>
#include <exception>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "sginfer/cli.hpp"
#include "sginfer/errors.hpp"

namespace {

using sginfer::cli::ResolvedConfig;

struct FlagSet {
    std::map<std::string, std::string> overrides;
    std::string config_file;
};

// Every value flag funnels into the overrides map as raw text; parsing and
// constraint checks live in parse_config so file/flag/manifest inputs share
// one code path.
void add_common_flags(CLI::App* sub, FlagSet& flags) {
    auto opt = [&flags, sub](const std::string& flag, const std::string& key,
                             const std::string& desc) {
        sub->add_option_function<std::string>(
            flag, [&flags, key](const std::string& v) { flags.overrides[key] = v; }, desc);
    };
    sub->add_option("--config", flags.config_file, "JSON config file (flags override it)");
    opt("--preset", "preset", "experiment preset name");
    opt("--data", "data", "input dataset CSV (x1,...,xp,y)");
    opt("--seed", "seed", "master seed");
    opt("--out", "out", "output directory");
    opt("--parallel", "parallel", "worker threads for simulations");
    opt("--method", "method", "sgd|svrg|timeseries|oracle");
    opt("--sims", "sims", "number of simulations");
    opt("--isa", "isa", "kernel backend: auto|scalar|avx2");
    opt("--level", "level", "confidence level");
    opt("--lag", "lag", "block length / lag parameter");
    opt("--loss", "loss", "squared|logistic (CSV input)");
    opt("--n", "n", "sample count for generated data");
    opt("--T", "T", "outer iterations");
    opt("--L", "L", "inner iterations");
    opt("--S-o", "S_o", "outer batch size");
    opt("--S-i", "S_i", "inner batch size");
    opt("--rho0", "rho0", "outer step scale");
    opt("--d-o", "d_o", "outer decay rate");
    opt("--tau0", "tau0", "inner step scale");
    opt("--d-i", "d_i", "inner decay rate");
    opt("--delta0", "delta0", "HVP scale multiplier");
    opt("--d-L", "d_L", "inner-loop growth exponent");
    opt("--lambda", "lambda", "l1 penalty (highdim)");
    opt("--omega", "omega", "covariance threshold (highdim)");
    opt("--dense-limit", "dense_limit", "dense-mode dimension limit (highdim)");
    opt("--hd-T", "hd_T", "highdim outer iterations");
    opt("--hd-point-epochs", "hd_point_epochs", "prox-SVRG epochs for the point estimate");
    opt("--hd-solve-epochs", "hd_solve_epochs", "SVRG epochs per linear solve");
    opt("--sigma-hat", "sigma_hat", "noise scale estimate (skips the CV pre-pass)");
    opt("--l1-hat", "l1_hat", "l1-norm estimate (skips the CV pre-pass)");
    opt("--debias-mode", "debias_mode", "exact|svrg");
    sub->add_flag_function(
        "--oracle", [&flags](std::int64_t) { flags.overrides["oracle"] = "true"; },
        "also emit the plug-in sandwich covariance");
    sub->add_flag_function(
        "--with-replicates", [&flags](std::int64_t) { flags.overrides["with_replicates"] = "true"; },
        "run the replicate track and export it (highdim)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic-gradient statistical inference for M-estimation"};
    app.require_subcommand(1);

    FlagSet infer_flags, coverage_flags, highdim_flags, ts_flags;
    CLI::App* infer = app.add_subcommand("infer", "point estimate + confidence intervals");
    add_common_flags(infer, infer_flags);
    CLI::App* coverage = app.add_subcommand("coverage", "Monte Carlo coverage simulation");
    add_common_flags(coverage, coverage_flags);
    CLI::App* highdim = app.add_subcommand("highdim", "high-dimensional de-biased inference");
    add_common_flags(highdim, highdim_flags);
    CLI::App* timeseries = app.add_subcommand("timeseries", "block-sampled OLS inference");
    add_common_flags(timeseries, ts_flags);

    std::string manifest_path, rerun_out;
    CLI::App* rerun = app.add_subcommand("rerun", "reproduce a run from its manifest");
    rerun->add_option("--manifest", manifest_path, "manifest.json of the original run")
        ->required();
    rerun->add_option("--out", rerun_out, "output directory (default: original)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (rerun->parsed()) {
            sginfer::cli::cmd_rerun(manifest_path, rerun_out);
            return 0;
        }
        const FlagSet* flags = nullptr;
        std::string command;
        if (infer->parsed()) { flags = &infer_flags; command = "infer"; }
        else if (coverage->parsed()) { flags = &coverage_flags; command = "coverage"; }
        else if (highdim->parsed()) { flags = &highdim_flags; command = "highdim"; }
        else { flags = &ts_flags; command = "timeseries"; }
        ResolvedConfig cfg =
            sginfer::cli::parse_config(command, flags->config_file, flags->overrides);
        sginfer::cli::run_command(cfg);
        return 0;
    } catch (const sginfer::config_error& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const sginfer::usage_error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const sginfer::partial_failure_error& e) {
        std::fprintf(stderr, "partial failure: %s\n", e.what());
        return 4;
    } catch (const sginfer::numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const sginfer::linalg_error& e) {
        std::fprintf(stderr, "linear-algebra error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

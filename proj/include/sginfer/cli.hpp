#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sginfer/presets.hpp"

namespace sginfer::cli {

// Flat resolved configuration: defaults <- preset <- config file <- flags.
// Everything needed to reproduce a command byte-identically lives here.
struct ResolvedConfig {
    std::string command;  // infer | coverage | highdim | timeseries
    std::string preset_name;
    std::string data_path;  // optional CSV input
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::size_t parallel = 1;
    bool oracle = false;
    std::string method;  // sgd | svrg | timeseries | oracle (empty = preset default)
    std::size_t sims = 0;  // 0 = preset default
    std::string isa = "auto";
    double level = 0.95;
    std::size_t lag = 0;

    ExperimentPreset preset;  // with all overrides applied

    // high-dimensional extras
    double sigma_hat = -1.0;  // < 0: cross-validated LASSO pre-pass
    double l1_hat = -1.0;
    bool with_replicates = false;
    std::string debias_mode;  // "exact" | "svrg" | "" = by dense_limit
};

// Overrides as string key -> raw string value (from flags); numeric parsing and
// constraint checks happen here. Unknown keys are rejected.
ResolvedConfig parse_config(const std::string& command, const std::string& config_file,
                            const std::map<std::string, std::string>& overrides);

// Serialized resolved config (manifest payload); parse_config(command, "",
// from_manifest_json(...)) round-trips it.
std::string resolved_to_json(const ResolvedConfig& cfg);
std::map<std::string, std::string> overrides_from_manifest(const std::string& manifest_path,
                                                           std::string& command_out);

struct CommandResult {
    std::vector<std::string> outputs;  // relative paths written (manifest excluded)
};

CommandResult cmd_infer(const ResolvedConfig& cfg);
CommandResult cmd_coverage(const ResolvedConfig& cfg);
CommandResult cmd_highdim(const ResolvedConfig& cfg);
CommandResult cmd_rerun(const std::string& manifest_path, const std::string& out_override);

// Dispatches on cfg.command, applies the kernel backend, writes the manifest.
CommandResult run_command(const ResolvedConfig& cfg);

std::size_t default_threads();  // NEWTON_INFER_THREADS or 1

}  // namespace sginfer::cli

#include <charconv>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "sginfer/cli.hpp"
#include "sginfer/errors.hpp"

namespace sginfer::cli {

using nlohmann::json;

namespace {

double parse_double(const std::string& key, const std::string& value) {
    double v;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
        throw config_error(key + ": expected a number, got '" + value + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
        throw config_error(key + ": expected a non-negative integer, got '" + value + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw config_error(key + ": expected true/false, got '" + value + "'");
}

// Applies one key to the config; unknown key -> config_error.
void apply_key(ResolvedConfig& cfg, const std::string& key, const std::string& value) {
    NewtonInferConfig& nw = cfg.preset.newton;
    HighDimConfig& hd = cfg.preset.highdim;
    if (key == "preset") { cfg.preset_name = value; return; }  // handled earlier; echoed
    if (key == "data") { cfg.data_path = value; return; }
    if (key == "seed") { cfg.seed = parse_u64(key, value); return; }
    if (key == "out") { cfg.out_dir = value; return; }
    if (key == "parallel") { cfg.parallel = parse_u64(key, value); return; }
    if (key == "oracle") { cfg.oracle = parse_bool(key, value); return; }
    if (key == "method") { cfg.method = value; return; }
    if (key == "sims") { cfg.sims = parse_u64(key, value); return; }
    if (key == "isa") { cfg.isa = value; return; }
    if (key == "level") { cfg.level = parse_double(key, value); return; }
    if (key == "lag") { cfg.lag = parse_u64(key, value); return; }
    if (key == "n") { cfg.preset.n = parse_u64(key, value); return; }
    if (key == "loss") {
        if (value == "squared") { cfg.preset.loss.kind = LossKind::SquaredLinear; return; }
        if (value == "logistic") { cfg.preset.loss.kind = LossKind::Logistic; return; }
        throw config_error("loss must be squared|logistic");
    }
    if (key == "T") { nw.T = parse_u64(key, value); return; }
    if (key == "L") { nw.L = parse_u64(key, value); return; }
    if (key == "S_o") { nw.S_o = parse_u64(key, value); return; }
    if (key == "S_i") { nw.S_i = parse_u64(key, value); return; }
    if (key == "rho0") { nw.rho0 = parse_double(key, value); return; }
    if (key == "d_o") { nw.d_o = parse_double(key, value); return; }
    if (key == "tau0") { nw.tau0 = parse_double(key, value); return; }
    if (key == "d_i") { nw.d_i = parse_double(key, value); return; }
    if (key == "delta0") { nw.delta0 = parse_double(key, value); return; }
    if (key == "d_L") { nw.d_L = parse_double(key, value); return; }
    if (key == "lambda") { hd.lambda = parse_double(key, value); return; }
    if (key == "omega") { hd.omega = parse_double(key, value); return; }
    if (key == "dense_limit") { hd.dense_limit = parse_u64(key, value); return; }
    if (key == "hd_T") { hd.T = parse_u64(key, value); return; }
    if (key == "hd_S_o") { hd.S_o = parse_u64(key, value); return; }
    if (key == "hd_S_i") { hd.S_i = parse_u64(key, value); return; }
    if (key == "hd_L_i") { hd.L_i = parse_u64(key, value); return; }
    if (key == "hd_tau") { hd.tau = parse_double(key, value); return; }
    if (key == "hd_eta") { hd.eta = parse_double(key, value); return; }
    if (key == "hd_point_epochs") { hd.point_epochs = parse_u64(key, value); return; }
    if (key == "hd_solve_epochs") { hd.solve_epochs = parse_u64(key, value); return; }
    if (key == "sigma_hat") { cfg.sigma_hat = parse_double(key, value); return; }
    if (key == "l1_hat") { cfg.l1_hat = parse_double(key, value); return; }
    if (key == "with_replicates") { cfg.with_replicates = parse_bool(key, value); return; }
    if (key == "debias_mode") { cfg.debias_mode = value; return; }
    throw config_error("unknown configuration key: " + key);
}

std::string json_scalar_to_string(const std::string& key, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof(buf), v.get<double>(),
                                 std::chars_format::general, 17);
        return std::string(buf, res.ptr);
    }
    throw config_error(key + ": unsupported JSON value type");
}

void validate(ResolvedConfig& cfg) {
    if (cfg.command != "highdim") cfg.preset.newton.validate();
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw config_error("level must lie in (0,1)");
    if (!cfg.method.empty()) method_from_name(cfg.method);  // throws on bad name
    if (cfg.isa != "auto" && cfg.isa != "scalar" && cfg.isa != "avx2") {
        throw config_error("isa must be auto|scalar|avx2");
    }
    if (!cfg.debias_mode.empty() && cfg.debias_mode != "exact" && cfg.debias_mode != "svrg") {
        throw config_error("debias_mode must be exact|svrg");
    }
    const HighDimConfig& hd = cfg.preset.highdim;
    if (hd.lambda < 0.0) throw config_error("lambda must be >= 0");
    if (hd.omega < 0.0) throw config_error("omega must be >= 0");
}

}  // namespace

ResolvedConfig parse_config(const std::string& command, const std::string& config_file,
                            const std::map<std::string, std::string>& overrides) {
    ResolvedConfig cfg;
    cfg.command = command;
    cfg.parallel = default_threads();

    // preset selection first: file value unless a flag overrides it
    std::string preset_name;
    json file_json;
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw config_error("cannot open config file: " + config_file);
        try {
            in >> file_json;
        } catch (const json::exception& e) {
            throw config_error(std::string("config file parse error: ") + e.what());
        }
        if (!file_json.is_object()) throw config_error("config file must hold a JSON object");
        if (file_json.contains("preset")) preset_name = file_json["preset"].get<std::string>();
    }
    if (auto it = overrides.find("preset"); it != overrides.end()) preset_name = it->second;
    if (!preset_name.empty()) {
        cfg.preset = preset_by_name(preset_name);
        cfg.preset_name = preset_name;
        cfg.sims = cfg.preset.n_sims;
        cfg.lag = cfg.preset.lag;
    } else if (cfg.command != "highdim") {
        // without a preset, data must come from a CSV and method from flags
        cfg.preset.name = "custom";
    } else {
        cfg.preset = preset_by_name("highdim_null");
        cfg.preset.name = "custom";
    }

    if (!config_file.empty()) {
        for (const auto& [key, value] : file_json.items()) {
            if (key == "preset") continue;
            apply_key(cfg, key, json_scalar_to_string(key, value));
        }
    }
    for (const auto& [key, value] : overrides) {
        if (key == "preset") continue;
        apply_key(cfg, key, value);
    }
    validate(cfg);
    return cfg;
}

std::string resolved_to_json(const ResolvedConfig& cfg) {
    json j;
    j["preset"] = cfg.preset_name;
    j["data"] = cfg.data_path;
    j["out"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["parallel"] = cfg.parallel;
    j["oracle"] = cfg.oracle;
    j["method"] = cfg.method;
    j["sims"] = cfg.sims;
    j["isa"] = cfg.isa;
    j["level"] = cfg.level;
    j["lag"] = cfg.lag;
    j["n"] = cfg.preset.n;
    j["loss"] = cfg.preset.loss.kind == LossKind::Logistic ? "logistic" : "squared";
    const NewtonInferConfig& nw = cfg.preset.newton;
    j["T"] = nw.T;
    j["L"] = nw.L;
    j["S_o"] = nw.S_o;
    j["S_i"] = nw.S_i;
    j["rho0"] = nw.rho0;
    j["d_o"] = nw.d_o;
    j["tau0"] = nw.tau0;
    j["d_i"] = nw.d_i;
    j["delta0"] = nw.delta0;
    j["d_L"] = nw.d_L;
    const HighDimConfig& hd = cfg.preset.highdim;
    j["lambda"] = hd.lambda;
    j["omega"] = hd.omega;
    j["dense_limit"] = hd.dense_limit;
    j["hd_T"] = hd.T;
    j["hd_S_o"] = hd.S_o;
    j["hd_S_i"] = hd.S_i;
    j["hd_L_i"] = hd.L_i;
    j["hd_tau"] = hd.tau;
    j["hd_eta"] = hd.eta;
    j["hd_point_epochs"] = hd.point_epochs;
    j["hd_solve_epochs"] = hd.solve_epochs;
    j["sigma_hat"] = cfg.sigma_hat;
    j["l1_hat"] = cfg.l1_hat;
    j["with_replicates"] = cfg.with_replicates;
    j["debias_mode"] = cfg.debias_mode;
    return j.dump(2);
}

std::map<std::string, std::string> overrides_from_manifest(const std::string& manifest_path,
                                                           std::string& command_out) {
    std::ifstream in(manifest_path);
    if (!in) throw config_error("cannot open manifest: " + manifest_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error(std::string("manifest parse error: ") + e.what());
    }
    if (!j.contains("command") || !j.contains("config")) {
        throw config_error("manifest missing command/config fields");
    }
    command_out = j["command"].get<std::string>();
    std::map<std::string, std::string> overrides;
    for (const auto& [key, value] : j["config"].items()) {
        overrides[key] = json_scalar_to_string(key, value);
    }
    return overrides;
}

std::size_t default_threads() {
    if (const char* env = std::getenv("NEWTON_INFER_THREADS")) {
        std::size_t v = 0;
        auto res = std::from_chars(env, env + std::char_traits<char>::length(env), v);
        if (res.ec == std::errc{} && v >= 1) return v;
    }
    return 1;
}

}  // namespace sginfer::cli

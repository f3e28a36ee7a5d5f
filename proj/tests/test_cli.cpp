#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "sginfer/cli.hpp"
#include "sginfer/errors.hpp"
#include "sginfer/inference.hpp"

using namespace sginfer;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

int run_cli(const std::string& args) {
    const char* bin = std::getenv("SGINFER_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd = std::string(bin) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("parse_config") {
    SUBCASE("preset defaults for lin1") {
        auto cfg = cli::parse_config("coverage", "", {{"preset", "lin1"}});
        CHECK(cfg.preset.newton.T == 100);
        CHECK(cfg.preset.newton.L == 200);
        CHECK(cfg.preset.newton.rho0 == 0.1);
        CHECK(cfg.preset.newton.S_o == 10);
        CHECK(cfg.preset.newton.d_o == doctest::Approx(2.0 / 3.0));
        CHECK(cfg.preset.newton.delta0 == 0.01);
        CHECK(cfg.sims == 200);
        CHECK(cfg.preset.n == 100);
        CHECK(cfg.preset.truth.sigma == 0.7);
        CHECK(cfg.preset.truth.theta_star[3] == doctest::Approx(1.0 / std::sqrt(10.0)));
    }
    SUBCASE("preset defaults for log1") {
        auto cfg = cli::parse_config("coverage", "", {{"preset", "log1"}});
        CHECK(cfg.preset.newton.T == 50);
        CHECK(cfg.preset.newton.L == 100);
        CHECK(cfg.preset.newton.tau0 == 2.0);
        CHECK(cfg.preset.newton.delta0 == 0.01);
        CHECK(cfg.preset.loss.kind == LossKind::Logistic);
        // mirrored classes with identity covariance: theta* = 2 * shift
        CHECK(cfg.preset.truth.theta_star[0] == doctest::Approx(0.2 / std::sqrt(10.0)));
    }
    SUBCASE("constraint violations are configuration errors") {
        CHECK_THROWS_AS(cli::parse_config("infer", "", {{"preset", "lin1"}, {"d_o", "0.4"}}),
                        config_error);
        CHECK_THROWS_AS(cli::parse_config("infer", "", {{"preset", "lin1"}, {"level", "1.5"}}),
                        config_error);
        CHECK_THROWS_AS(cli::parse_config("infer", "", {{"preset", "nope"}}), config_error);
        CHECK_THROWS_AS(cli::parse_config("infer", "", {{"preset", "lin1"}, {"zzz", "1"}}),
                        config_error);
        CHECK_THROWS_AS(cli::parse_config("infer", "", {{"preset", "lin1"}, {"T", "abc"}}),
                        config_error);
    }
    SUBCASE("flags override file values and round-trip through the manifest format") {
        fs::path dir = temp_dir("sginfer_cfg");
        fs::path file = dir / "c.json";
        std::ofstream(file) << R"({"preset":"lin1","seed":5,"tau0":0.25})";
        auto cfg = cli::parse_config("infer", file.string(), {{"tau0", "0.75"}, {"out", "x"}});
        CHECK(cfg.seed == 5);
        CHECK(cfg.preset.newton.tau0 == 0.75);  // flag wins

        // round trip: re-parse the serialized resolved config
        fs::path manifest = dir / "manifest.json";
        std::ofstream(manifest) << "{\"command\":\"infer\",\"config\":"
                                << cli::resolved_to_json(cfg) << "}";
        std::string command;
        auto overrides = cli::overrides_from_manifest(manifest.string(), command);
        CHECK(command == "infer");
        auto cfg2 = cli::parse_config(command, "", overrides);
        CHECK(cli::resolved_to_json(cfg2) == cli::resolved_to_json(cfg));
        fs::remove_all(dir);
    }
    SUBCASE("unknown config file key is rejected with its name") {
        fs::path dir = temp_dir("sginfer_cfg2");
        fs::path file = dir / "c.json";
        std::ofstream(file) << R"({"preset":"lin1","tau_zero":2})";
        try {
            cli::parse_config("infer", file.string(), {});
            FAIL("expected config_error");
        } catch (const config_error& e) {
            CHECK(std::string(e.what()).find("tau_zero") != std::string::npos);
        }
        fs::remove_all(dir);
    }
}

TEST_CASE("infer command reruns byte-identically") {
    fs::path out1 = temp_dir("sginfer_run1");
    fs::path out2 = temp_dir("sginfer_run2");
    auto cfg = cli::parse_config(
        "infer", "",
        {{"preset", "mean_est"}, {"seed", "7"}, {"T", "100"}, {"out", out1.string()}});
    cli::run_command(cfg);
    cli::cmd_rerun((out1 / "manifest.json").string(), out2.string());
    for (const char* f : {"ci.csv", "replicates.csv", "covariance.csv"}) {
        CHECK(slurp(out1 / f) == slurp(out2 / f));
    }
    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("infer variants") {
    SUBCASE("--oracle also writes the plug-in covariance") {
        fs::path out = temp_dir("sginfer_oracle");
        auto cfg = cli::parse_config("infer", "",
                                     {{"preset", "lin1"},
                                      {"seed", "5"},
                                      {"oracle", "true"},
                                      {"out", out.string()}});
        cli::run_command(cfg);
        REQUIRE(fs::exists(out / "covariance_plugin.csv"));
        // spot-check against the inference module on the same generated data
        Dataset d = cfg.preset.generate(cfg.seed);
        std::vector<double> zero(d.p, 0.0);
        auto theta = exact_solver(cfg.preset.loss, d, zero);
        auto plug = plugin_sandwich_lowdim(cfg.preset.loss, d, theta);
        std::ifstream in(out / "covariance_plugin.csv");
        std::string header, firstrow;
        std::getline(in, header);
        std::getline(in, firstrow);
        const double v00 = std::stod(firstrow.substr(0, firstrow.find(',')));
        CHECK(v00 == doctest::Approx(plug.matrix(0, 0)).epsilon(1e-12));
        fs::remove_all(out);
    }
    SUBCASE("sgd and svrg methods share the schedule columns") {
        fs::path o1 = temp_dir("sginfer_m_sgd");
        fs::path o2 = temp_dir("sginfer_m_svrg");
        for (auto& [out, method] : {std::pair<fs::path&, const char*>{o1, "sgd"},
                                    std::pair<fs::path&, const char*>{o2, "svrg"}}) {
            auto cfg = cli::parse_config("infer", "",
                                         {{"preset", "lin1"},
                                          {"seed", "6"},
                                          {"T", "10"},
                                          {"method", method},
                                          {"out", out.string()}});
            cli::run_command(cfg);
        }
        // same t and rho_t columns, different replicates
        std::ifstream a(o1 / "replicates.csv"), b(o2 / "replicates.csv");
        std::string la, lb;
        std::getline(a, la);
        std::getline(b, lb);
        CHECK(la == lb);  // header
        while (std::getline(a, la) && std::getline(b, lb)) {
            const auto cut = [](const std::string& s) {
                const auto p1 = s.find(',');
                return s.substr(0, s.find(',', p1 + 1));
            };
            CHECK(cut(la) == cut(lb));
        }
        fs::remove_all(o1);
        fs::remove_all(o2);
    }
    SUBCASE("timeseries export carries block starts") {
        fs::path out = temp_dir("sginfer_ts");
        auto cfg = cli::parse_config("timeseries", "",
                                     {{"preset", "ts_ma"},
                                      {"seed", "8"},
                                      {"T", "5"},
                                      {"out", out.string()}});
        cli::run_command(cfg);
        std::ifstream in(out / "replicates.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header.rfind("t,rho_t,block_start,g1", 0) == 0);
        fs::remove_all(out);
    }
}

TEST_CASE("coverage command") {
    SUBCASE("single-simulation report is valid") {
        fs::path out = temp_dir("sginfer_cov1");
        auto cfg = cli::parse_config("coverage", "",
                                     {{"preset", "mean_est"},
                                      {"seed", "3"},
                                      {"sims", "1"},
                                      {"T", "200"},
                                      {"out", out.string()}});
        cli::run_command(cfg);
        const std::string json = slurp(out / "coverage.json");
        CHECK(json.find("\"n_sims\": 1") != std::string::npos);
        CHECK(json.find("\"failures\": 0") != std::string::npos);
        fs::remove_all(out);
    }
    SUBCASE("parallel degree does not change the report") {
        fs::path o1 = temp_dir("sginfer_cov_p1");
        fs::path o2 = temp_dir("sginfer_cov_p8");
        for (auto& [out, par] : {std::pair<fs::path&, const char*>{o1, "1"},
                                 std::pair<fs::path&, const char*>{o2, "8"}}) {
            auto cfg = cli::parse_config("coverage", "",
                                         {{"preset", "mean_est"},
                                          {"seed", "4"},
                                          {"sims", "8"},
                                          {"T", "150"},
                                          {"parallel", par},
                                          {"out", out.string()}});
            cli::run_command(cfg);
        }
        CHECK(slurp(o1 / "coverage.json") == slurp(o2 / "coverage.json"));
        fs::remove_all(o1);
        fs::remove_all(o2);
    }
}

TEST_CASE("cli exit codes") {
    fs::path out = temp_dir("sginfer_exit");
    CHECK(run_cli("infer --preset nope --out " + (out / "a").string()) == 2);
    CHECK(run_cli("infer --preset lin1 --d-o 0.4 --out " + (out / "b").string()) == 2);
    CHECK(run_cli("badsub") == 2);
    // explosive steps: numeric/divergence errors exit with 3
    CHECK(run_cli("infer --preset lin1 --tau0 1e9 --rho0 10 --seed 1 --out " +
                  (out / "c").string()) == 3);
    CHECK(run_cli("coverage --preset mean_est --sims 2 --T 50 --seed 2 --out " +
                  (out / "d").string()) == 0);
    // every simulation failing crosses the 10% threshold: exit 4
    CHECK(run_cli("coverage --preset lin1 --sims 2 --tau0 1e9 --rho0 10 --seed 3 --out " +
                  (out / "e").string()) == 4);
    fs::remove_all(out);
}

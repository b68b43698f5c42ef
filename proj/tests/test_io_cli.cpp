#include "catch_amalgamated.hpp"

#include "npod/cli.hpp"
#include "npod/errors.hpp"
#include "npod/io.hpp"

#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace npod;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(NPOD_SOURCE_DIR) / "configs";

fs::path scratch_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("npod_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct Run {
    int code;
    std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "npod");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

const char* kMinimalConfig = R"({
  "model": {"kind": "one_comp_iv", "parameters": [{"name": "Ke", "lower": 0.01, "upper": 1.0},
                                                  {"name": "Vd", "lower": 10, "upper": 100}]},
  "error": {"c0": 0.1, "c1": 0.0, "mode": "additive", "value": 0.0}
})";

const char* kData =
    "id,evid,time,amount,duration,route,obs\n"
    "a,1,0,100,0.5,infusion,\n"
    "a,0,1,,,,3.5\n"
    "a,0,4,,,,1.25\n"
    "b,1,0,50,0,oral,\n"
    "b,0,2,,,,0.75\n";

}  // namespace

TEST_CASE("event CSV parsing", "[io]") {
    const auto pop = parse_data_csv_text(kData);
    REQUIRE(pop.size() == 2);
    CHECK(pop[0].id() == "a");
    CHECK(pop[0].doses() == std::vector<DoseEvent>{{0.0, 100.0, 0.5, Route::infusion}});
    CHECK(pop[0].observations().size() == 2);
    CHECK(pop[0].observations()[1].value == 1.25);
    CHECK(pop[1].doses()[0].route == Route::oral);
    CHECK(parse_data_csv_text(format_data_csv(pop)) == pop);
}

TEST_CASE("event CSV errors name the line", "[io]") {
    auto line_of = [](const std::string& text) {
        try {
            parse_data_csv_text(text, "x.csv");
        } catch (const ParseError& e) {
            return e.line();
        }
        return std::size_t{9999};
    };
    const std::string h = "id,evid,time,amount,duration,route,obs\n";
    CHECK(line_of("id,time\n") == 1);
    CHECK(line_of(h + "a,0,1,,,,abc\n") == 2);
    CHECK(line_of(h + "a,0,1,5,,,1.0\n") == 2);
    CHECK(line_of(h + "a,0,2,,,,1.0\na,0,1,,,,1.0\n") == 3);
    CHECK(line_of(h + "a,0,1,,,,1.0\nb,0,1,,,,1.0\na,0,2,,,,1.0\n") == 4);
    CHECK(line_of(h + "a,2,1,,,,1.0\n") == 2);
    CHECK(line_of(h + "a,0,1,,,\n") == 2);
    CHECK(line_of(h + "a,1,0,100,0,bolus,\n") == 2);
    CHECK_THROWS_AS(parse_data_csv("/nonexistent/data.csv"), ParseError);
}

TEST_CASE("config defaults and strict schema", "[io]") {
    const auto cfg = parse_config_text(kMinimalConfig);
    CHECK(cfg.space.dim() == 2);
    CHECK(cfg.fit.init_points == FitConfig{}.init_points);
    CHECK(cfg.fit.delta_f == 1e-4);
    CHECK(cfg.optimality_probes == 10000);
    CHECK_FALSE(cfg.simulation.has_value());

    auto with_fit = [](const std::string& fit) {
        std::string s = kMinimalConfig;
        s.insert(s.rfind('}'), ", \"fit\": " + fit);
        return s;
    };
    try {
        parse_config_text(with_fit(R"({"delta": 0.1})"));
        FAIL("unknown key accepted");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("delta") != std::string::npos);
    }
    CHECK(parse_config_text(with_fit(R"({"nm_steps": 0})")).fit.refinement.nm_steps == 0);
    CHECK_THROWS_AS(parse_config_text(with_fit(R"({"init_points": 0})")), SchemaError);
    CHECK_THROWS_AS(parse_config_text(with_fit(R"({"init_points": "many"})")), SchemaError);
    CHECK_THROWS_AS(parse_config_text(with_fit(R"({"nm_relative_spread": -1})")), SchemaError);
    CHECK_THROWS_AS(parse_config_text("{"), SchemaError);
    CHECK_THROWS_AS(parse_config_text(R"({"model": {"kind": "three_comp", "parameters": []}, "error": {}})"),
                    SchemaError);

    for (const char* name : {"dataset_a.json", "toy_1d.json", "two_comp_oral.json"})
        CHECK_NOTHROW(parse_config(kConfigs / name));
}

TEST_CASE("output tables round trip", "[io]") {
    const ParameterSpace space({"Ke", "Vd"}, {0.0, 1.0}, {1.0, 100.0});
    const DiscreteDistribution d({SupportPoint{{0.1, 50.0}}, SupportPoint{{0.3333333333333333, 20.25}}},
                                 {0.7, 0.30000000000000004});
    const auto path = scratch_dir("tables") / "sp.csv";
    write_file_atomic(path, format_support_points(d, space));
    const auto back = parse_support_points(path, space);
    CHECK(back.points() == d.points());
    CHECK(back.weights() == d.weights());

    const std::vector<CycleRecord> cycles{{1, -10.5, 4, 3}, {2, -9.25, 3, 1}};
    const auto cpath = path.parent_path() / "cycles.csv";
    write_file_atomic(cpath, format_cycles(cycles));
    const auto cb = parse_cycles(cpath);
    REQUIRE(cb.size() == 2);
    CHECK(cb[1].log_likelihood == -9.25);
    CHECK(cb[1].n_points_after_reduce == 3);
    CHECK(read_file(cpath).find("18.5") != std::string::npos);
}

TEST_CASE("format_double is shortest round trip", "[io]") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.0) == "-2");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("CLI usage errors and missing files", "[cli]") {
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);
    CHECK(run_cli({"fit", "--config", "x.json"}).code == 1);
    const auto r = run_cli({"fit", "--config", "/nonexistent/cfg.json", "--data", "/nonexistent/d.csv",
                        "--out", scratch_dir("missing").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("/nonexistent/cfg.json") != std::string::npos);
    CHECK(run_cli({"--version"}).code == 0);
}

TEST_CASE("CLI simulate is reproducible", "[cli]") {
    const auto a = scratch_dir("sim_a"), b = scratch_dir("sim_b");
    const auto cfg = (kConfigs / "toy_1d.json").string();
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", a.string(), "--seed", "7"}).code == 0);
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", b.string(), "--seed", "7"}).code == 0);
    CHECK(read_file(a / "data.csv") == read_file(b / "data.csv"));
    CHECK(read_file(a / "truth.csv") == read_file(b / "truth.csv"));
    const auto c = scratch_dir("sim_c");
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", c.string(), "--seed", "8"}).code == 0);
    CHECK(read_file(a / "data.csv") != read_file(c / "data.csv"));
    CHECK(fs::exists(a / "simulate.manifest.json"));
}

TEST_CASE("CLI fit, check and report on the toy", "[cli]") {
    const auto dir = scratch_dir("pipeline");
    const auto cfg = (kConfigs / "toy_1d.json").string();
    const auto data = (dir / "data.csv").string();
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", dir.string()}).code == 0);
    const auto fit = run_cli({"fit", "--config", cfg, "--data", data, "--out", dir.string()});
    REQUIRE(fit.code == 0);
    REQUIRE(run_cli({"check", "--config", cfg, "--data", data, "--out", dir.string()}).code == 0);
    REQUIRE(run_cli({"report", "--out", dir.string()}).code == 0);

    const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
    const double ll = summary["log_likelihood"].get<double>();
    CHECK(summary["neg2_log_likelihood"].get<double>() == -2.0 * ll);
    CHECK(summary["converged"].get<bool>());
    CHECK(summary["n_subjects"].get<int>() == 10);
    const double n = 10.0;
    CHECK(summary["optimality"]["max_d_probe"].get<double>() <= 1e-2 * n);
    CHECK(summary["optimality"]["satisfied"].get<bool>());
    CHECK(read_file(dir / "report.svg").rfind("<svg", 0) == 0);
    const auto cycles = parse_cycles(dir / "cycles.csv");
    CHECK(cycles.back().log_likelihood == ll);
}

TEST_CASE("CLI reports non-convergence with exit code 2", "[cli]") {
    const auto dir = scratch_dir("noconv");
    const auto cfg_path = dir / "cfg.json";
    auto j = nlohmann::json::parse(read_file(kConfigs / "toy_1d.json"));
    j["fit"]["max_cycles"] = 0;
    write_file_atomic(cfg_path, j.dump());
    REQUIRE(run_cli({"simulate", "--config", cfg_path.string(), "--out", dir.string()}).code == 0);
    const auto r = run_cli({"fit", "--config", cfg_path.string(), "--data", (dir / "data.csv").string(), "--out",
                        dir.string()});
    CHECK(r.code == 2);
    CHECK(fs::exists(dir / "support_points.csv"));
    const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
    CHECK_FALSE(summary["converged"].get<bool>());
}

TEST_CASE("CLI rejects a bad NPML_THREADS value", "[cli]") {
    const auto dir = scratch_dir("threads");
    const auto cfg = (kConfigs / "toy_1d.json").string();
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", dir.string()}).code == 0);
    ::setenv("NPML_THREADS", "lots", 1);
    const auto r = run_cli({"fit", "--config", cfg, "--data", (dir / "data.csv").string(), "--out", dir.string()});
    ::unsetenv("NPML_THREADS");
    CHECK(r.code == 1);
    CHECK(r.err.find("NPML_THREADS") != std::string::npos);
}

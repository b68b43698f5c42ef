#include "npod/cli.hpp"

#include "npod/driver.hpp"
#include "npod/errors.hpp"
#include "npod/io.hpp"
#include "npod/sampling.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <ostream>

namespace npod::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kConvergenceFailure = 2;

struct Options {
    std::string config;
    std::string data;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

unsigned resolve_thread_option(const Options& o) {
    if (o.threads) return *o.threads;
    if (const char* env = std::getenv("NPML_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 0) throw SchemaError("NPML_THREADS must be a non-negative integer");
        return static_cast<unsigned>(v);
    }
    return 0;
}

class Manifest {
public:
    Manifest(std::string command, const Options& o) : started_(utc_now()) {
        j_["npod_version"] = kVersion;
        j_["command"] = std::move(command);
        j_["started_at"] = started_;
        if (!o.config.empty()) add_input("config", o.config);
        if (!o.data.empty()) add_input("data", o.data);
    }

    void add_input(const std::string& role, const fs::path& path) {
        const auto digest = fnv1a_hex(read_file(path));
        j_["inputs"][role] = {{"path", path.string()}, {"fnv1a64", digest}};
        if (role == "config") j_["config_digest"] = digest;
    }

    json& operator[](const char* k) { return j_[k]; }

    void write(const fs::path& dir, const std::string& command) {
        j_["finished_at"] = utc_now();
        write_file_atomic(dir / (command + ".manifest.json"), j_.dump(2) + "\n");
    }

private:
    std::string started_;
    json j_;
};

json stats_json(const DiscreteDistribution& dist, const ParameterSpace& space) {
    const auto st = weighted_stats(dist);
    json cov = json::array();
    for (Eigen::Index a = 0; a < st.covariance.rows(); ++a) {
        json row = json::array();
        for (Eigen::Index b = 0; b < st.covariance.cols(); ++b) row.push_back(st.covariance(a, b));
        cov.push_back(row);
    }
    return {{"parameters", space.names()},
            {"mean", st.mean},
            {"variance", st.variance},
            {"median", st.median},
            {"covariance", cov}};
}

int run_fit(const Options& o, std::ostream& out, std::ostream& err) {
    auto cfg = parse_config(o.config);
    const auto pop = parse_data_csv(o.data);
    if (o.seed) cfg.fit.seed = *o.seed;
    cfg.fit.threads = resolve_thread_option(o);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    Manifest manifest("fit", o);
    manifest["seed"] = cfg.fit.seed;
    manifest["threads"] = cfg.fit.threads;

    const auto model = cfg.model();
    FitResult result = [&] {
        try {
            return fit_npod(pop, cfg.space, model, cfg.error, cfg.fit);
        } catch (const FitError& e) {
            write_file_atomic(dir / "cycles.csv", format_cycles(e.cycles()));
            manifest["error"] = e.what();
            manifest.write(dir, "fit");
            throw;
        }
    }();

    write_file_atomic(dir / "support_points.csv", format_support_points(result.distribution, cfg.space));
    write_file_atomic(dir / "cycles.csv", format_cycles(result.cycles));
    json summary = {
        {"n_subjects", pop.size()},
        {"model", to_string(cfg.kind)},
        {"log_likelihood", result.log_likelihood},
        {"neg2_log_likelihood", -2.0 * result.log_likelihood},
        {"cycles", result.cycles.size()},
        {"converged", result.converged},
        {"n_support_points", result.distribution.size()},
        {"weighted_stats", stats_json(result.distribution, cfg.space)},
        {"optimality", nullptr},
    };
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
    json wall = json::array();
    for (const auto& c : result.cycles) wall.push_back(c.wall_time_ms);
    manifest["cycle_wall_time_ms"] = wall;
    manifest.write(dir, "fit");

    out << "fit: " << result.cycles.size() << " cycles, log-likelihood " << format_double(result.log_likelihood)
        << ", " << result.distribution.size() << " support points" << (result.converged ? "" : " (not converged)")
        << "\n";
    if (!result.converged) {
        err << "fit did not converge within max_cycles = " << cfg.fit.max_cycles << "\n";
        return kConvergenceFailure;
    }
    return kOk;
}

int run_simulate(const Options& o, std::ostream& out, std::ostream&) {
    auto cfg = parse_config(o.config);
    if (!cfg.simulation) throw SchemaError(o.config + ": no 'simulation' section");
    auto spec = *cfg.simulation;
    if (o.seed) spec.seed = *o.seed;
    const fs::path dir(o.out);
    fs::create_directories(dir);
    Manifest manifest("simulate", o);
    manifest["seed"] = spec.seed;

    const auto sim = simulate_population(spec);
    write_file_atomic(dir / "data.csv", format_data_csv(sim.population));
    write_file_atomic(dir / "truth.csv", format_truth(sim, cfg.space));
    manifest.write(dir, "simulate");
    out << "simulate: " << sim.population.size() << " subjects written to " << (dir / "data.csv").string() << "\n";
    return kOk;
}

int run_check(const Options& o, std::ostream& out, std::ostream&) {
    const auto cfg = parse_config(o.config);
    const auto pop = parse_data_csv(o.data);
    const fs::path dir(o.out);
    const auto dist = parse_support_points(dir / "support_points.csv", cfg.space);
    const auto summary_path = dir / "summary.json";
    json summary;
    try {
        summary = json::parse(read_file(summary_path));
    } catch (const json::parse_error& e) {
        throw ParseError(summary_path.string(), 0, e.what());
    }
    Manifest manifest("check", o);
    manifest.add_input("support_points", dir / "support_points.csv");

    const auto cert = optimality_check(dist, pop, cfg.space, cfg.model(), cfg.error, cfg.optimality_probes,
                                       resolve_thread_option(o));
    const double bound = 1e-2 * static_cast<double>(pop.size());
    summary["optimality"] = {{"max_d_probe", cert.max_d_probe},
                             {"n_probes", cert.n_probes},
                             {"max_abs_d_support", cert.max_abs_d_support},
                             {"bound", bound},
                             {"satisfied", cert.max_d_probe <= bound}};
    write_file_atomic(summary_path, summary.dump(2) + "\n");
    manifest.write(dir, "check");
    out << "check: max D over " << cert.n_probes << " probes = " << format_double(cert.max_d_probe)
        << " (bound " << format_double(bound) << ")\n";
    return kOk;
}

int run_report(const Options& o, std::ostream& out, std::ostream&) {
    const fs::path dir(o.out);
    const auto cycles = parse_cycles(dir / "cycles.csv");
    const auto sp_path = dir / "support_points.csv";
    const auto text = read_file(sp_path);
    const auto header = text.substr(0, text.find('\n'));
    std::vector<std::string> names;
    for (std::size_t b = 0, e; b <= header.size(); b = e + 1) {
        e = header.find(',', b);
        if (e == std::string::npos) e = header.size();
        names.push_back(header.substr(b, e - b));
    }
    if (names.size() < 2 || names.back() != "weight") throw ParseError(sp_path.string(), 1, "unexpected header");
    names.pop_back();
    const ParameterSpace labels(names, std::vector<double>(names.size(), 0.0), std::vector<double>(names.size(), 1.0));
    const auto dist = parse_support_points(sp_path, labels);
    write_file_atomic(dir / "report.svg", render_report_svg(cycles, dist, names));
    out << "report: wrote " << (dir / "report.svg").string() << "\n";
    return kOk;
}

int classify(const std::exception_ptr& ep, std::ostream& err) {
    try {
        std::rethrow_exception(ep);
    } catch (const FitError& e) {
        err << "error: " << e.what() << "\n";
        try {
            std::rethrow_exception(e.cause());
        } catch (const ConvergenceError&) {
            return kConvergenceFailure;
        } catch (const DegeneratePsiError&) {
            return kConvergenceFailure;
        } catch (...) {
            return kInputError;
        }
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return kConvergenceFailure;
    } catch (const DegeneratePsiError& e) {
        err << "error: " << e.what() << "\n";
        return kConvergenceFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nonparametric maximum-likelihood population PK fitting (NPOD)", "npod"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Options o;
    auto add_common = [&](CLI::App* sub, bool config, bool data) {
        if (config) sub->add_option("--config", o.config, "Run configuration (JSON)")->required();
        if (data) sub->add_option("--data", o.data, "Event data (CSV)")->required();
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--threads", o.threads, "Worker threads, 0 = auto (falls back to NPML_THREADS)");
    };
    auto* fit = app.add_subcommand("fit", "Fit a population with NPOD");
    add_common(fit, true, true);
    fit->add_option("--seed", o.seed, "Override fit.seed");
    auto* simulate = app.add_subcommand("simulate", "Simulate a cohort from the config's simulation section");
    add_common(simulate, true, false);
    simulate->add_option("--seed", o.seed, "Override simulation.seed");
    auto* check = app.add_subcommand("check", "Probe the D-function of a finished fit");
    add_common(check, true, true);
    auto* report = app.add_subcommand("report", "Render report.svg from a finished fit");
    add_common(report, false, false);

    std::vector<std::string> argv;
    for (std::size_t i = args.size(); i-- > 1;) argv.push_back(args[i]);
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return kOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }

    try {
        if (fit->parsed()) return run_fit(o, out, err);
        if (simulate->parsed()) return run_simulate(o, out, err);
        if (check->parsed()) return run_check(o, out, err);
        return run_report(o, out, err);
    } catch (...) {
        return classify(std::current_exception(), err);
    }
}

}  // namespace npod::cli

#include "npod/io.hpp"

#include "npod/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace npod {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw DomainError("cannot format number");
    return std::string(buf, end);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

double parse_number(const std::string& s, const std::string& source, std::size_t line, const char* field) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (s.empty() || ec != std::errc() || p != e || !std::isfinite(v))
        throw ParseError(source, line, std::string("invalid number in '") + field + "': '" + s + "'");
    return v;
}

struct PendingSubject {
    std::string id;
    std::vector<DoseEvent> doses;
    std::vector<ObservationEvent> obs;
    double last_time = -1.0;
    std::size_t first_line = 0;
};

const char* kDataHeader = "id,evid,time,amount,duration,route,obs";

}  // namespace

Population parse_data_csv_text(const std::string& text, const std::string& source) {
    const auto lines = lines_of(text);
    if (lines.empty() || lines[0] != kDataHeader)
        throw ParseError(source, 1, std::string("expected header '") + kDataHeader + "'");

    std::vector<Subject> subjects;
    std::unordered_set<std::string> finished;
    std::optional<PendingSubject> cur;
    auto flush = [&]() {
        if (!cur) return;
        try {
            subjects.emplace_back(cur->id, std::move(cur->doses), std::move(cur->obs));
        } catch (const Error& e) {
            throw ParseError(source, cur->first_line, e.what());
        }
        finished.insert(cur->id);
        cur.reset();
    };

    for (std::size_t n = 1; n < lines.size(); ++n) {
        const std::size_t lineno = n + 1;
        const auto& line = lines[n];
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw ParseError(source, lineno, "expected 7 fields, found " + std::to_string(f.size()));
        const std::string& id = f[0];
        if (id.empty()) throw ParseError(source, lineno, "empty id");
        if (!cur || cur->id != id) {
            flush();
            if (finished.count(id)) throw ParseError(source, lineno, "rows for id '" + id + "' are not contiguous");
            cur = PendingSubject{id, {}, {}, -1.0, lineno};
        }
        const double t = parse_number(f[2], source, lineno, "time");
        if (t < 0.0) throw ParseError(source, lineno, "negative time");
        if (t < cur->last_time) throw ParseError(source, lineno, "times for id '" + id + "' are not sorted");
        cur->last_time = t;

        if (f[1] == "1") {
            if (!f[6].empty()) throw ParseError(source, lineno, "dose row must leave 'obs' empty");
            DoseEvent d;
            d.time = t;
            d.amount = parse_number(f[3], source, lineno, "amount");
            d.duration = f[4].empty() ? 0.0 : parse_number(f[4], source, lineno, "duration");
            try {
                d.route = f[5].empty() ? Route::infusion : route_from_string(f[5]);
                d.validate();
            } catch (const Error& e) {
                throw ParseError(source, lineno, e.what());
            }
            cur->doses.push_back(d);
        } else if (f[1] == "0") {
            if (!f[3].empty() || !f[4].empty() || !f[5].empty())
                throw ParseError(source, lineno, "observation row must leave amount, duration and route empty");
            cur->obs.push_back({t, parse_number(f[6], source, lineno, "obs"), 0});
        } else {
            throw ParseError(source, lineno, "evid must be 0 or 1, found '" + f[1] + "'");
        }
    }
    flush();
    if (subjects.empty()) throw ParseError(source, 0, "no subjects");
    return Population(std::move(subjects));
}

Population parse_data_csv(const std::filesystem::path& path) {
    return parse_data_csv_text(read_file(path), path.string());
}

std::string format_data_csv(const Population& pop) {
    std::string out = std::string(kDataHeader) + "\n";
    for (const auto& s : pop) {
        auto d = s.doses().begin();
        auto o = s.observations().begin();
        while (d != s.doses().end() || o != s.observations().end()) {
            if (d != s.doses().end() && (o == s.observations().end() || d->time <= o->time)) {
                out += s.id() + ",1," + format_double(d->time) + "," + format_double(d->amount) + "," +
                       format_double(d->duration) + "," + to_string(d->route) + ",\n";
                ++d;
            } else {
                out += s.id() + ",0," + format_double(o->time) + ",,,," + format_double(o->value) + "\n";
                ++o;
            }
        }
    }
    return out;
}

// ---- configuration ---------------------------------------------------------

namespace {

class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw SchemaError(where_ + ": expected an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!ok.count(it.key())) throw SchemaError(where_ + ": unknown key '" + it.key() + "'");
    }

    bool has(const char* key) const { return j_.contains(key); }

    const json& at(const char* key) const {
        if (!j_.contains(key)) throw SchemaError(where_ + ": missing required key '" + key + "'");
        return j_.at(key);
    }

    double number(const char* key) const {
        const auto& v = at(key);
        if (!v.is_number()) throw SchemaError(path(key) + ": expected a number");
        return v.get<double>();
    }
    double number(const char* key, double dflt) const { return has(key) ? number(key) : dflt; }

    std::int64_t integer(const char* key) const {
        const auto& v = at(key);
        if (!v.is_number_integer()) throw SchemaError(path(key) + ": expected an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const char* key, std::int64_t dflt) const { return has(key) ? integer(key) : dflt; }

    std::uint64_t unsigned_integer(const char* key, std::uint64_t dflt) const {
        if (!has(key)) return dflt;
        const auto& v = at(key);
        if (!v.is_number_unsigned()) throw SchemaError(path(key) + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const char* key, bool dflt) const {
        if (!has(key)) return dflt;
        const auto& v = at(key);
        if (!v.is_boolean()) throw SchemaError(path(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string string(const char* key) const {
        const auto& v = at(key);
        if (!v.is_string()) throw SchemaError(path(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char* key) const {
        const auto& v = at(key);
        if (!v.is_array()) throw SchemaError(path(key) + ": expected an array of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw SchemaError(path(key) + ": expected an array of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    const json& array(const char* key) const {
        const auto& v = at(key);
        if (!v.is_array()) throw SchemaError(path(key) + ": expected an array");
        return v;
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

private:
    const json& j_;
    std::string where_;
};

template <typename Fn>
auto wrap_domain(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

ErrorModel parse_error_model(const json& j, const std::string& where) {
    Reader r(j, where);
    r.allow({"c0", "c1", "c2", "c3", "mode", "value"});
    ErrorModel e;
    e.poly = {r.number("c0", 0.0), r.number("c1", 0.0), r.number("c2", 0.0), r.number("c3", 0.0)};
    e.mode = wrap_domain(where, [&] { return noise_mode_from_string(r.string("mode")); });
    e.noise = r.number("value");
    wrap_domain(where, [&] {
        e.validate();
        return 0;
    });
    return e;
}

std::vector<DoseEvent> parse_regimen(const Reader& r, const std::string& where) {
    std::vector<DoseEvent> out;
    std::size_t i = 0;
    for (const auto& item : r.array("regimen")) {
        const std::string w = where + ".regimen[" + std::to_string(i++) + "]";
        Reader d(item, w);
        d.allow({"time", "amount", "duration", "route"});
        DoseEvent ev;
        ev.time = d.number("time");
        ev.amount = d.number("amount");
        ev.duration = d.number("duration", 0.0);
        ev.route = d.has("route") ? wrap_domain(w, [&] { return route_from_string(d.string("route")); })
                                  : Route::infusion;
        wrap_domain(w, [&] {
            ev.validate();
            return 0;
        });
        out.push_back(ev);
    }
    return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(source + ": invalid JSON: " + e.what());
    }
    Reader top(root, source);
    top.allow({"model", "error", "fit", "simulation"});

    Reader model(top.at("model"), "model");
    model.allow({"kind", "parameters", "fixed"});
    const auto kind = wrap_domain("model.kind", [&] { return model_kind_from_string(model.string("kind")); });
    std::vector<std::string> names;
    std::vector<double> lower, upper;
    std::size_t i = 0;
    for (const auto& p : model.array("parameters")) {
        Reader pr(p, "model.parameters[" + std::to_string(i++) + "]");
        pr.allow({"name", "lower", "upper"});
        names.push_back(pr.string("name"));
        lower.push_back(pr.number("lower"));
        upper.push_back(pr.number("upper"));
    }
    auto space = wrap_domain("model.parameters", [&] { return ParameterSpace(names, lower, upper); });
    std::map<std::string, double> fixed;
    if (model.has("fixed")) {
        const auto& fj = model.at("fixed");
        if (!fj.is_object()) throw SchemaError("model.fixed: expected an object");
        for (auto it = fj.begin(); it != fj.end(); ++it) {
            if (!it.value().is_number()) throw SchemaError("model.fixed." + it.key() + ": expected a number");
            fixed[it.key()] = it.value().get<double>();
        }
    }
    const ModelSpec spec = wrap_domain("model", [&] { return ModelSpec(kind, space, fixed); });

    const ErrorModel error = parse_error_model(top.at("error"), "error");

    FitConfig fit;
    std::size_t probes = 10000;
    if (top.has("fit")) {
        Reader f(top.at("fit"), "fit");
        f.allow({"init_points", "seed", "scramble", "max_cycles", "delta_f", "delta_lambda", "delta_d", "nm_steps",
                 "qr_ratio_threshold", "nm_initial_spread", "nm_relative_spread", "pdip_tol",
                 "pdip_max_iterations", "optimality_probes"});
        const auto k0 = f.integer("init_points", static_cast<std::int64_t>(fit.init_points));
        if (k0 < 1) throw SchemaError("fit.init_points: must be >= 1");
        fit.init_points = static_cast<std::size_t>(k0);
        fit.seed = f.unsigned_integer("seed", fit.seed);
        fit.scramble = f.boolean("scramble", fit.scramble);
        fit.max_cycles = static_cast<int>(f.integer("max_cycles", fit.max_cycles));
        fit.delta_f = f.number("delta_f", fit.delta_f);
        fit.refinement.delta_lambda = f.number("delta_lambda", fit.refinement.delta_lambda);
        fit.refinement.delta_d = f.number("delta_d", fit.refinement.delta_d);
        fit.refinement.nm_steps = static_cast<int>(f.integer("nm_steps", fit.refinement.nm_steps));
        fit.refinement.qr_ratio_threshold = f.number("qr_ratio_threshold", fit.refinement.qr_ratio_threshold);
        fit.refinement.nm_initial_spread = f.number("nm_initial_spread", fit.refinement.nm_initial_spread);
        fit.refinement.nm_relative_spread = f.number("nm_relative_spread", fit.refinement.nm_relative_spread);
        fit.weights.tol = f.number("pdip_tol", fit.weights.tol);
        fit.weights.max_iterations = static_cast<int>(f.integer("pdip_max_iterations", fit.weights.max_iterations));
        const auto np = f.integer("optimality_probes", static_cast<std::int64_t>(probes));
        if (np < 0) throw SchemaError("fit.optimality_probes: must be >= 0");
        probes = static_cast<std::size_t>(np);
        wrap_domain("fit", [&] {
            fit.validate();
            return 0;
        });
    }

    std::optional<SimulationSpec> sim;
    if (top.has("simulation")) {
        const std::string w = "simulation";
        Reader s(top.at("simulation"), w);
        s.allow({"n_subjects", "seed", "regimen", "sample_times", "truth", "fixed_subjects", "error"});
        std::vector<MixtureComponent> truth;
        if (s.has("truth")) {
            std::size_t c = 0;
            for (const auto& item : s.array("truth")) {
                Reader t(item, w + ".truth[" + std::to_string(c++) + "]");
                t.allow({"fraction", "mean", "sd"});
                truth.push_back({t.number("fraction", 1.0), t.numbers("mean"), t.numbers("sd")});
            }
        }
        std::vector<SupportPoint> fixed_subjects;
        if (s.has("fixed_subjects")) {
            std::size_t c = 0;
            for (const auto& item : s.array("fixed_subjects")) {
                const std::string fw = w + ".fixed_subjects[" + std::to_string(c++) + "]";
                if (!item.is_array()) throw SchemaError(fw + ": expected an array of numbers");
                SupportPoint p;
                for (const auto& x : item) {
                    if (!x.is_number()) throw SchemaError(fw + ": expected an array of numbers");
                    p.coords.push_back(x.get<double>());
                }
                fixed_subjects.push_back(std::move(p));
            }
        }
        const auto n = s.integer("n_subjects", 0);
        if (n < 0) throw SchemaError(w + ".n_subjects: must be >= 0");
        SimulationSpec simspec{spec,
                               std::move(truth),
                               std::move(fixed_subjects),
                               parse_regimen(s, w),
                               s.numbers("sample_times"),
                               s.has("error") ? parse_error_model(s.at("error"), w + ".error") : error,
                               static_cast<std::size_t>(n),
                               s.unsigned_integer("seed", 0),
                               space};
        wrap_domain(w, [&] {
            simspec.validate();
            return 0;
        });
        sim = std::move(simspec);
    }

    return RunConfig{kind, std::move(space), std::move(fixed), error, fit, probes, std::move(sim)};
}

RunConfig parse_config(const std::filesystem::path& path) {
    return parse_config_text(read_file(path), path.string());
}

// ---- fit outputs -------------------------------------------------------------

std::string format_support_points(const DiscreteDistribution& dist, const ParameterSpace& space) {
    std::string out;
    for (const auto& n : space.names()) out += n + ",";
    out += "weight\n";
    for (std::size_t k = 0; k < dist.size(); ++k) {
        for (double v : dist.points()[k].coords) out += format_double(v) + ",";
        out += format_double(dist.weights()[k]) + "\n";
    }
    return out;
}

DiscreteDistribution parse_support_points(const std::filesystem::path& path, const ParameterSpace& space) {
    const auto src = path.string();
    const auto lines = lines_of(read_file(path));
    std::string header;
    for (const auto& n : space.names()) header += n + ",";
    header += "weight";
    if (lines.empty() || lines[0] != header) throw ParseError(src, 1, "expected header '" + header + "'");
    std::vector<SupportPoint> pts;
    std::vector<double> w;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        const auto f = split_csv_line(lines[n]);
        if (f.size() != space.dim() + 1) throw ParseError(src, n + 1, "wrong number of fields");
        SupportPoint p;
        for (std::size_t j = 0; j < space.dim(); ++j) p.coords.push_back(parse_number(f[j], src, n + 1, "coordinate"));
        pts.push_back(std::move(p));
        w.push_back(parse_number(f.back(), src, n + 1, "weight"));
    }
    try {
        return DiscreteDistribution(std::move(pts), std::move(w));
    } catch (const Error& e) {
        throw ParseError(src, 0, e.what());
    }
}

std::string format_cycles(const std::vector<CycleRecord>& cycles) {
    std::string out = "cycle,log_likelihood,neg2_log_likelihood,n_points\n";
    for (const auto& c : cycles)
        out += std::to_string(c.cycle) + "," + format_double(c.log_likelihood) + "," +
               format_double(-2.0 * c.log_likelihood) + "," + std::to_string(c.n_points_after_reduce) + "\n";
    return out;
}

std::vector<CycleRecord> parse_cycles(const std::filesystem::path& path) {
    const auto src = path.string();
    const auto lines = lines_of(read_file(path));
    if (lines.empty() || lines[0] != "cycle,log_likelihood,neg2_log_likelihood,n_points")
        throw ParseError(src, 1, "unexpected header");
    std::vector<CycleRecord> out;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        const auto f = split_csv_line(lines[n]);
        if (f.size() != 4) throw ParseError(src, n + 1, "expected 4 fields");
        CycleRecord c;
        c.cycle = static_cast<int>(parse_number(f[0], src, n + 1, "cycle"));
        c.log_likelihood = parse_number(f[1], src, n + 1, "log_likelihood");
        c.n_points_after_reduce = static_cast<std::size_t>(parse_number(f[3], src, n + 1, "n_points"));
        out.push_back(c);
    }
    return out;
}

std::string format_truth(const SimulatedPopulation& sim, const ParameterSpace& space) {
    std::string out = "id,component";
    for (const auto& n : space.names()) out += "," + n;
    out += "\n";
    for (std::size_t i = 0; i < sim.theta.size(); ++i) {
        out += sim.population[i].id() + "," + std::to_string(sim.component[i]);
        for (double v : sim.theta[i].coords) out += "," + format_double(v);
        out += "\n";
    }
    return out;
}

// ---- SVG report ----------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo, hi;
    double px0, px1;
    double map(double v) const { return hi > lo ? px0 + (v - lo) / (hi - lo) * (px1 - px0) : 0.5 * (px0 + px1); }
};

Axis padded(double lo, double hi, double px0, double px1) {
    const double pad = hi > lo ? 0.05 * (hi - lo) : (std::abs(lo) > 0 ? 0.05 * std::abs(lo) : 1.0);
    return {lo - pad, hi + pad, px0, px1};
}

std::string panel_frame(double x, double y, double w, double h, const std::string& title, const std::string& xl,
                        const std::string& yl, const Axis& ax, const Axis& ay) {
    std::string s;
    s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + fmt(x + w / 2) + "\" y=\"" + fmt(y - 10) + "\" text-anchor=\"middle\">" + escape_xml(title) +
         "</text>\n";
    s += "<text x=\"" + fmt(x + w / 2) + "\" y=\"" + fmt(y + h + 36) + "\" text-anchor=\"middle\">" + escape_xml(xl) +
         "</text>\n";
    s += "<text x=\"" + fmt(x - 48) + "\" y=\"" + fmt(y + h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 " +
         fmt(x - 48) + " " + fmt(y + h / 2) + ")\">" + escape_xml(yl) + "</text>\n";
    char buf[64];
    for (int t = 0; t <= 4; ++t) {
        const double fx = ax.lo + (ax.hi - ax.lo) * t / 4.0;
        const double fy = ay.lo + (ay.hi - ay.lo) * t / 4.0;
        std::snprintf(buf, sizeof buf, "%.4g", fx);
        s += "<text x=\"" + fmt(ax.map(fx)) + "\" y=\"" + fmt(y + h + 16) +
             "\" text-anchor=\"middle\" font-size=\"10\">" + buf + "</text>\n";
        std::snprintf(buf, sizeof buf, "%.4g", fy);
        s += "<text x=\"" + fmt(x - 6) + "\" y=\"" + fmt(ay.map(fy) + 3) + "\" text-anchor=\"end\" font-size=\"10\">" +
             buf + "</text>\n";
    }
    return s;
}

}  // namespace

std::string render_report_svg(const std::vector<CycleRecord>& cycles, const DiscreteDistribution& dist,
                              const std::vector<std::string>& names) {
    const double W = 960, H = 440, pw = 360, ph = 300, top = 60;
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" + fmt(H) +
                    "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Objective trace.
    {
        const double x0 = 90;
        double lo = cycles.empty() ? 0.0 : cycles.front().log_likelihood, hi = lo;
        for (const auto& c : cycles) {
            lo = std::min(lo, c.log_likelihood);
            hi = std::max(hi, c.log_likelihood);
        }
        const Axis ax = padded(1.0, std::max(1.0, static_cast<double>(cycles.size())), x0, x0 + pw);
        const Axis ay = padded(lo, hi, top + ph, top);
        s += panel_frame(x0, top, pw, ph, "log-likelihood by cycle", "cycle", "log-likelihood", ax, ay);
        std::string pts;
        for (const auto& c : cycles) pts += fmt(ax.map(c.cycle)) + "," + fmt(ay.map(c.log_likelihood)) + " ";
        s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        for (const auto& c : cycles)
            s += "<circle cx=\"" + fmt(ax.map(c.cycle)) + "\" cy=\"" + fmt(ay.map(c.log_likelihood)) +
                 "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    }

    // Support points: first two coordinates, area proportional to weight.
    {
        const double x0 = 560;
        const std::size_t jx = 0, jy = dist.dim() > 1 ? 1 : 0;
        double xlo = dist.points().front()[jx], xhi = xlo, ylo = dist.points().front()[jy], yhi = ylo;
        for (const auto& p : dist.points()) {
            xlo = std::min(xlo, p[jx]);
            xhi = std::max(xhi, p[jx]);
            ylo = std::min(ylo, p[jy]);
            yhi = std::max(yhi, p[jy]);
        }
        const Axis ax = padded(xlo, xhi, x0, x0 + pw);
        const Axis ay = dist.dim() > 1 ? padded(ylo, yhi, top + ph, top) : Axis{0.0, 1.0, top + ph, top};
        const std::string xname = names.empty() ? "x" : names[jx];
        const std::string yname = dist.dim() > 1 && names.size() > 1 ? names[jy] : "weight";
        s += panel_frame(x0, top, pw, ph, "support points", xname, yname, ax, ay);
        double wmax = *std::max_element(dist.weights().begin(), dist.weights().end());
        for (std::size_t k = 0; k < dist.size(); ++k) {
            const auto& p = dist.points()[k];
            const double w = dist.weights()[k];
            const double y = dist.dim() > 1 ? ay.map(p[jy]) : ay.map(w / wmax);
            const double r = 2.0 + 10.0 * std::sqrt(w / wmax);
            s += "<circle cx=\"" + fmt(ax.map(p[jx])) + "\" cy=\"" + fmt(y) + "\" r=\"" + fmt(r) +
                 "\" fill=\"#d62728\" fill-opacity=\"0.5\" stroke=\"#d62728\"/>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

}  // namespace npod

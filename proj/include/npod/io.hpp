#pragma once

// File formats: the event CSV, the JSON run configuration, and the CSV/JSON/SVG
// outputs of a fit.

#include "npod/driver.hpp"
#include "npod/sampling.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace npod {

// Header: id,evid,time,amount,duration,route,obs
// evid=1 rows are doses (obs empty); evid=0 rows are observations
// (amount, duration and route empty). A subject's rows must be contiguous.
Population parse_data_csv(const std::filesystem::path& path);
Population parse_data_csv_text(const std::string& text, const std::string& source = "<memory>");
std::string format_data_csv(const Population& pop);

struct RunConfig {
    ModelKind kind = ModelKind::one_comp_iv;
    ParameterSpace space;
    std::map<std::string, double> fixed;
    ErrorModel error;
    FitConfig fit;
    std::size_t optimality_probes = 10000;
    std::optional<SimulationSpec> simulation;

    ModelSpec model() const { return ModelSpec(kind, space, fixed); }
};

// Strict schema: unknown keys, wrong types and missing required fields raise
// SchemaError naming the offending key.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::string& source = "<memory>");

std::string format_support_points(const DiscreteDistribution& dist, const ParameterSpace& space);
DiscreteDistribution parse_support_points(const std::filesystem::path& path, const ParameterSpace& space);

// cycle,log_likelihood,neg2_log_likelihood,n_points
std::string format_cycles(const std::vector<CycleRecord>& cycles);
std::vector<CycleRecord> parse_cycles(const std::filesystem::path& path);

std::string format_truth(const SimulatedPopulation& sim, const ParameterSpace& space);

std::string render_report_svg(const std::vector<CycleRecord>& cycles, const DiscreteDistribution& dist,
                              const std::vector<std::string>& names);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace npod

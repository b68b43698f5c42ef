#pragma once

// Sobol grids for initialization and seeded simulation of test cohorts.

#include "npod/core.hpp"
#include "npod/likelihood.hpp"
#include "npod/models.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace npod {

// Sobol sequence in Gray-code order with Joe-Kuo (new-joe-kuo-6.21201)
// direction numbers, 32-bit resolution, dimensions 1..32. Point 0 is the
// origin. With a scramble seed every coordinate is passed through a
// hash-based nested uniform (Owen-style) scramble keyed per dimension.
class SobolSequence {
public:
    static constexpr std::size_t kMaxDimension = 32;

    explicit SobolSequence(std::size_t dim, std::optional<std::uint32_t> scramble_seed = std::nullopt);

    std::size_t dimension() const noexcept { return dim_; }
    std::vector<double> point(std::uint64_t index) const;

private:
    std::size_t dim_;
    std::optional<std::uint32_t> seed_;
    std::vector<std::array<std::uint32_t, 32>> directions_;
};

// Points 1..n of the sequence (the origin is skipped).
std::vector<std::vector<double>> sobol_points(std::size_t dim, std::size_t n,
                                              std::optional<std::uint32_t> scramble_seed = std::nullopt);

std::vector<SupportPoint> init_grid(const ParameterSpace& space, std::size_t count,
                                    std::optional<std::uint32_t> scramble_seed = std::nullopt);

// Counter-based generator: every value is a hash of (seed, stream, counter),
// so a subject's draws depend only on its own stream.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();
    double uniform();  // [0, 1)
    double normal();   // standard normal, Box-Muller

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// A product of independent normals; sd = 0 gives a point mass.
struct MixtureComponent {
    double fraction = 1.0;
    std::vector<double> mean;
    std::vector<double> sd;
};

struct SimulationSpec {
    ModelSpec model;
    std::vector<MixtureComponent> truth;
    std::vector<SupportPoint> fixed_subjects;  // appended after the mixture draws
    std::vector<DoseEvent> regimen;
    std::vector<double> sample_times;
    ErrorModel error;
    std::size_t n_subjects = 1;  // drawn from the mixture
    std::uint64_t seed = 0;
    std::optional<ParameterSpace> bounds;  // draws outside are rejected

    void validate() const;
};

struct SimulatedPopulation {
    Population population;
    std::vector<SupportPoint> theta;     // true parameters per subject
    std::vector<int> component;          // mixture component, -1 for fixed subjects
};

// Noise is Normal(0, omega) with sigma evaluated at the noiseless prediction.
SimulatedPopulation simulate_population(const SimulationSpec& spec);

// Bimodal Ke / unimodal Vd cohort receiving a 500-unit, 30-minute infusion
// with ten samples over 24 h and 5% proportional assay noise, plus one
// outlier subject at (Ke = 1.0, Vd = 200).
ParameterSpace dataset_a_space();
SimulationSpec dataset_a_simulation(std::uint64_t seed, std::size_t n_mixture_subjects = 50);
ErrorModel dataset_a_error();

}  // namespace npod

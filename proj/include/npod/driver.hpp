#pragma once

// The NPOD outer loop, a dense fixed-grid reference fit, the post-fit
// optimality probe and weighted summary statistics.

#include "npod/core.hpp"
#include "npod/errors.hpp"
#include "npod/likelihood.hpp"
#include "npod/models.hpp"
#include "npod/refine.hpp"
#include "npod/weights.hpp"

#include <cstdint>
#include <exception>
#include <optional>
#include <vector>

namespace npod {

struct FitConfig {
    std::size_t init_points = 1024;
    std::uint64_t seed = 0;
    bool scramble = false;  // scramble the initial Sobol grid with `seed`
    int max_cycles = 1000;
    double delta_f = 1e-4;
    RefinementConfig refinement;
    WeightOptions weights;
    unsigned threads = 1;  // 0 = hardware concurrency

    void validate() const;
};

struct OptimalityCertificate {
    double max_d_probe = 0.0;        // max D over probes and support points
    std::size_t n_probes = 0;
    double max_abs_d_support = 0.0;  // max |D| over the support points alone
};

struct FitResult {
    DiscreteDistribution distribution;
    double log_likelihood = 0.0;
    std::vector<CycleRecord> cycles;
    bool converged = false;
    std::optional<OptimalityCertificate> optimality;
};

// Raised when a cycle fails. The cycle log up to the failure is kept, and the
// original exception is available for classification.
class FitError : public Error {
public:
    FitError(const std::string& what, int cycle, std::vector<CycleRecord> log, std::exception_ptr cause)
        : Error(what), cycle_(cycle), log_(std::move(log)), cause_(std::move(cause)) {}

    int cycle() const noexcept { return cycle_; }
    const std::vector<CycleRecord>& cycles() const noexcept { return log_; }
    std::exception_ptr cause() const noexcept { return cause_; }

private:
    int cycle_;
    std::vector<CycleRecord> log_;
    std::exception_ptr cause_;
};

// One cycle is: build Psi, optimize weights, condense, reduce, optimize
// again. Between cycles the grid is expanded with dopt. The fit stops once
// the log-likelihood changed by less than delta_f and dopt proposed nothing,
// or after max_cycles expansions (max_cycles = 0 returns the weighted
// initial grid). Cycles are numbered from 1.
FitResult fit_npod(const Population& pop, const ParameterSpace& space, const ModelSpec& model,
                   const ErrorModel& error, const FitConfig& cfg);

struct FixedGridResult {
    DiscreteDistribution distribution;  // condensed, renormalized
    double log_likelihood = 0.0;        // from the weight optimizer, before condensing
    WeightSolution solution;            // on the full grid
};

FixedGridResult fixed_grid_npml(const Population& pop, const ParameterSpace& space, std::size_t grid_size,
                                const ModelSpec& model, const ErrorModel& error, const FitConfig& cfg = {});

// Evaluates D at n_probes scrambled Sobol points (fixed probe seed) and at
// every support point of `dist`.
OptimalityCertificate optimality_check(const DiscreteDistribution& dist, const Population& pop,
                                       const ParameterSpace& space, const ModelSpec& model, const ErrorModel& error,
                                       std::size_t n_probes, unsigned threads = 1,
                                       std::uint32_t probe_seed = 0x2545f491u);

// D at explicit probe points.
std::vector<double> d_at(const DiscreteDistribution& dist, std::span<const SupportPoint> probes,
                         const Population& pop, const ModelSpec& model, const ErrorModel& error,
                         unsigned threads = 1);

struct WeightedStats {
    std::vector<double> mean;
    std::vector<double> variance;
    Eigen::MatrixXd covariance;
    std::vector<double> median;  // smallest value with cumulative weight >= 0.5
};

WeightedStats weighted_stats(const DiscreteDistribution& dist);

}  // namespace npod

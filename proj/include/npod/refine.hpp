#pragma once

// Grid maintenance and exploration: condense, QR reduce, the directional
// derivative D(xi, F), a fixed-step Nelder-Mead, and the D-optimal expansion.

#include "npod/core.hpp"
#include "npod/likelihood.hpp"
#include "npod/models.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace npod {

struct RefinementConfig {
    double delta_lambda = 1e-3;
    double qr_ratio_threshold = 1e-8;
    double delta_d = 1e-4;  // minimum normalized L1 distance between points
    int nm_steps = 5;
    double nm_initial_spread = 0.1;  // fraction of the box width
    // When > 0, the simplex edge along j is this fraction of |theta_j|
    // instead (a zero coordinate uses the same fraction of the box width).
    double nm_relative_spread = 0.008;

    void validate() const;
};

// Indices k with weights[k] > max(weights) * delta_lambda, in order.
std::vector<std::size_t> condense(std::span<const double> weights, double delta_lambda);

// Column indices kept by the rank-revealing QR test, ascending. Columns are
// normalized to unit length before a column-pivoted QR; a column at pivot
// position i survives iff |r(i,i)| / ||r(:,i)|| > threshold.
// Zero-norm columns are never kept and are reported in zero_norm.
std::vector<std::size_t> reduce_columns(const Eigen::MatrixXd& psi, double threshold,
                                        std::vector<std::size_t>* zero_norm = nullptr);

struct ReduceResult {
    std::vector<SupportPoint> points;
    PsiMatrix psi;
    std::vector<std::size_t> kept;
    std::vector<std::string> warnings;
};

ReduceResult reduce(const PsiMatrix& psi, std::span<const SupportPoint> points, double threshold = 1e-8);

// log P(Y_i | F) = log((Psi lambda)_i) + row offset, for each subject.
std::vector<double> log_mixture_density(const PsiMatrix& psi, std::span<const double> weights);

// D(xi, F) = sum_i P(Y_i|xi) / P(Y_i|F) - N, evaluated ratio by ratio in log space.
double d_function(std::span<const double> log_density_xi, std::span<const double> log_mixture);
double d_function(const SupportPoint& xi, std::span<const double> log_mixture, const PopulationLikelihood& lik);
double d_function(const SupportPoint& xi, std::span<const double> log_mixture, const Population& pop,
                  const ModelSpec& m, const ErrorModel& e);

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
};

// Maximizes f over the unit cube for exactly `steps` Nelder-Mead iterations
// (reflection 1, expansion 2, contraction 0.5, shrink 0.5). Trial points are
// clamped into the cube before evaluation. Returns the best vertex.
NelderMeadResult nelder_mead_t(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                               int steps, double spread);
NelderMeadResult nelder_mead_t(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                               int steps, std::span<const double> spread);

// Per-dimension initial simplex edge in unit-cube coordinates.
std::vector<double> simplex_spread(const SupportPoint& theta, const ParameterSpace& space,
                                   const RefinementConfig& cfg);

// Proposes one candidate per current point by maximizing D from that point,
// then appends those that are inside the box and farther than delta_d from
// every point already present. The input points are always a prefix.
std::vector<SupportPoint> dopt(std::span<const SupportPoint> points, std::span<const double> weights,
                               const PsiMatrix& psi, const ParameterSpace& space, const RefinementConfig& cfg,
                               const PopulationLikelihood& lik, unsigned threads = 1);

}  // namespace npod

#pragma once

// Weight optimization for a fixed set of support points:
//   maximize sum_i log((Psi lambda)_i)  over the probability simplex.

#include "npod/core.hpp"

#include <vector>

namespace npod {

struct WeightOptions {
    double tol = 1e-8;
    int max_iterations = 200;
};

struct WeightSolution {
    std::vector<double> weights;
    double log_likelihood = 0.0;  // includes the Psi row offsets
    double kkt_residual = 0.0;
    int iterations = 0;
};

// Primal-dual interior point (Mehrotra predictor-corrector) followed by an
// active-set Newton polish on the support. Throws ConvergenceError when the
// KKT certificate cannot be met, DegeneratePsiError on a singular Newton system.
WeightSolution pdip_weights(const PsiMatrix& psi, WeightOptions opt = {});

// Same optimizer on a raw non-negative matrix. log_likelihood excludes offsets.
WeightSolution pdip_weights(const Eigen::MatrixXd& psi, WeightOptions opt = {});

// Gradient g_k = sum_i Psi_ik / (Psi lambda)_i at simplex weights lambda.
Eigen::VectorXd mixture_gradient(const Eigen::MatrixXd& psi, const Eigen::VectorXd& lambda);

// max( max_k (g_k - N), max_{lambda_k > support_tol} (N - g_k), 0 ).
double kkt_residual(const Eigen::MatrixXd& psi, const Eigen::VectorXd& lambda, double support_tol);

// sum_i log((Psi lambda)_i) + row offsets.
double mixture_log_likelihood(const PsiMatrix& psi, const std::vector<double>& lambda);

}  // namespace npod

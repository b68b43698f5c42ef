#pragma once

#include "npod/core.hpp"
#include "npod/models.hpp"

#include <array>
#include <memory>
#include <span>

namespace npod {

enum class NoiseMode { additive, proportional };

// sigma = c0 + c1*y + c2*y^2 + c3*y^3, combined into omega either as
// sqrt(sigma^2 + lambda^2) (additive) or sigma * gamma (proportional).
struct ErrorModel {
    std::array<double, 4> poly{0.0, 0.0, 0.0, 0.0};
    NoiseMode mode = NoiseMode::additive;
    double noise = 0.0;  // lambda for additive, gamma for proportional

    void validate() const;
};

const char* to_string(NoiseMode m);
NoiseMode noise_mode_from_string(const std::string& s);

double sigma_poly(const ErrorModel& e, double y);
double omega(double sigma, const ErrorModel& e);

// Caches the theta-independent noise terms of every subject so repeated
// evaluations only pay for the model prediction.
class PopulationLikelihood {
public:
    PopulationLikelihood(const Population& pop, const ModelSpec& m, const ErrorModel& e);
    ~PopulationLikelihood();
    PopulationLikelihood(PopulationLikelihood&&) noexcept;

    std::size_t size() const noexcept;
    double subject(std::size_t i, const SupportPoint& theta) const;
    // log p(Y_i | theta) for every subject.
    std::vector<double> all(const SupportPoint& theta) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// log p(Y_i | theta) under independent Gaussian residuals with sd omega(sigma(y_obs)).
double subject_log_likelihood(const Subject& s, const SupportPoint& theta, const ModelSpec& m, const ErrorModel& e);

// Psi over (subjects x grid). threads = 0 picks the hardware concurrency.
// Output is identical for every thread count.
PsiMatrix build_psi(const Population& pop, std::span<const SupportPoint> grid, const ModelSpec& m,
                    const ErrorModel& e, unsigned threads = 1);

// Unscaled N x K log-likelihood matrix.
Eigen::MatrixXd log_likelihood_matrix(const Population& pop, std::span<const SupportPoint> grid, const ModelSpec& m,
                                      const ErrorModel& e, unsigned threads = 1);

}  // namespace npod

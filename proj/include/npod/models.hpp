#pragma once

// Structural pharmacokinetic models: closed-form predictors for the
// one-compartment IV model and the two-compartment oral model with lag,
// plus an adaptive Dormand-Prince integrator of the same ODEs used as an
// independent cross-check.

#include "npod/core.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace npod {

enum class ModelKind { one_comp_iv, two_comp_oral_lag };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// Canonical parameter order: one_comp_iv (Ke, Vd); two_comp_oral_lag (Ka, Ke, Vd, tlag).
const std::vector<std::string>& model_parameter_names(ModelKind k);

struct Trajectory {
    std::vector<double> times;
    std::vector<double> predictions;
};

// Sums doses that share time, route and duration.
std::vector<DoseEvent> merge_doses(std::span<const DoseEvent> doses);

Trajectory predict_one_comp_iv(std::span<const double> theta, std::span<const DoseEvent> doses,
                               std::span<const double> times);
Trajectory predict_two_comp_oral_lag(std::span<const double> theta, std::span<const DoseEvent> doses,
                                     std::span<const double> times);

struct OdeTolerances {
    double rtol = 1e-10;
    double atol = 1e-14;
};

Trajectory integrate_ode(ModelKind kind, std::span<const double> theta, std::span<const DoseEvent> doses,
                         std::span<const double> times, OdeTolerances tol = {});

// A model kind bound to a parameter space. Parameters that are not free in
// the space must be supplied as fixed values.
class ModelSpec {
public:
    ModelSpec(ModelKind kind, const ParameterSpace& space, std::map<std::string, double> fixed = {});

    ModelKind kind() const noexcept { return kind_; }
    const std::map<std::string, double>& fixed() const noexcept { return fixed_; }
    std::size_t free_dim() const noexcept { return free_dim_; }

    // Canonical-order model parameters for a point in space coordinates.
    std::vector<double> full_parameters(const SupportPoint& theta) const;

    Trajectory predict(const SupportPoint& theta, std::span<const DoseEvent> doses,
                       std::span<const double> times) const;

private:
    ModelKind kind_;
    std::map<std::string, double> fixed_;
    std::size_t free_dim_;
    // For each canonical parameter: index into the space, or -1 when fixed.
    std::vector<int> source_;
    std::vector<double> fixed_values_;
};

}  // namespace npod

#include "npod/likelihood.hpp"

#include "npod/errors.hpp"
#include "npod/parallel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace npod {

namespace {

// Per-subject quantities that do not depend on theta: the observation
// standard deviations and the Gaussian normalizing constant.
struct SubjectNoise {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> inv_two_var;
    double log_norm = 0.0;  // -sum_j log(sqrt(2 pi) omega_j)
};

SubjectNoise prepare(const Subject& s, const ErrorModel& e) {
    SubjectNoise n;
    const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    try {
        for (const auto& o : s.observations()) {
            const double w = omega(sigma_poly(e, o.value), e);
            n.times.push_back(o.time);
            n.values.push_back(o.value);
            n.inv_two_var.push_back(1.0 / (2.0 * w * w));
            n.log_norm -= log_sqrt_2pi + std::log(w);
        }
    } catch (const NoiseModelError& err) {
        throw NoiseModelError("subject '" + s.id() + "': " + err.what());
    }
    return n;
}

double evaluate(const Subject& s, const SubjectNoise& n, const SupportPoint& theta, const ModelSpec& m) {
    Trajectory traj;
    try {
        traj = m.predict(theta, s.doses(), n.times);
    } catch (const DomainError& err) {
        throw DomainError("subject '" + s.id() + "': " + err.what());
    }
    double ss = 0.0;
    for (std::size_t j = 0; j < n.values.size(); ++j) {
        const double r = n.values[j] - traj.predictions[j];
        ss += r * r * n.inv_two_var[j];
    }
    const double lp = n.log_norm - ss;
    return std::isfinite(lp) ? lp : -std::numeric_limits<double>::infinity();
}

}  // namespace

struct PopulationLikelihood::Impl {
    const Population* pop;
    const ModelSpec* model;
    std::vector<SubjectNoise> noise;
};

PopulationLikelihood::PopulationLikelihood(const Population& pop, const ModelSpec& m, const ErrorModel& e)
    : impl_(std::make_unique<Impl>(Impl{&pop, &m, {}})) {
    impl_->noise.reserve(pop.size());
    for (const auto& s : pop) impl_->noise.push_back(prepare(s, e));
}

PopulationLikelihood::~PopulationLikelihood() = default;
PopulationLikelihood::PopulationLikelihood(PopulationLikelihood&&) noexcept = default;

std::size_t PopulationLikelihood::size() const noexcept {
    return impl_->noise.size();
}

double PopulationLikelihood::subject(std::size_t i, const SupportPoint& theta) const {
    return evaluate((*impl_->pop)[i], impl_->noise[i], theta, *impl_->model);
}

std::vector<double> PopulationLikelihood::all(const SupportPoint& theta) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = subject(i, theta);
    return out;
}

const char* to_string(NoiseMode m) {
    return m == NoiseMode::additive ? "additive" : "proportional";
}

NoiseMode noise_mode_from_string(const std::string& s) {
    if (s == "additive") return NoiseMode::additive;
    if (s == "proportional") return NoiseMode::proportional;
    throw DomainError("unknown error mode '" + s + "'");
}

void ErrorModel::validate() const {
    for (double c : poly)
        if (!std::isfinite(c)) throw NoiseModelError("error polynomial coefficients must be finite");
    if (mode == NoiseMode::additive && !(noise >= 0.0)) throw NoiseModelError("additive lambda must be >= 0");
    if (mode == NoiseMode::proportional && !(noise > 0.0)) throw NoiseModelError("proportional gamma must be > 0");
}

double sigma_poly(const ErrorModel& e, double y) {
    const double s = e.poly[0] + y * (e.poly[1] + y * (e.poly[2] + y * e.poly[3]));
    if (e.mode == NoiseMode::proportional && !(s > 0.0))
        throw NoiseModelError("non-positive sigma " + std::to_string(s) + " at y = " + std::to_string(y));
    return s;
}

double omega(double sigma, const ErrorModel& e) {
    const double w = e.mode == NoiseMode::additive ? std::sqrt(sigma * sigma + e.noise * e.noise) : sigma * e.noise;
    if (!(w > 0.0)) throw NoiseModelError("non-positive omega " + std::to_string(w));
    return w;
}

double subject_log_likelihood(const Subject& s, const SupportPoint& theta, const ModelSpec& m, const ErrorModel& e) {
    return evaluate(s, prepare(s, e), theta, m);
}

Eigen::MatrixXd log_likelihood_matrix(const Population& pop, std::span<const SupportPoint> grid, const ModelSpec& m,
                                      const ErrorModel& e, unsigned threads) {
    if (grid.empty()) throw DomainError("grid must contain at least one support point");
    const PopulationLikelihood lik(pop, m, e);
    const auto n = static_cast<Eigen::Index>(pop.size());
    Eigen::MatrixXd logp(n, static_cast<Eigen::Index>(grid.size()));
    parallel_for(grid.size(), threads, [&](std::size_t k) {
        for (Eigen::Index i = 0; i < n; ++i)
            logp(i, static_cast<Eigen::Index>(k)) = lik.subject(static_cast<std::size_t>(i), grid[k]);
    });
    return logp;
}

PsiMatrix build_psi(const Population& pop, std::span<const SupportPoint> grid, const ModelSpec& m,
                    const ErrorModel& e, unsigned threads) {
    const auto logp = log_likelihood_matrix(pop, grid, m, e, threads);
    std::vector<std::string> ids;
    ids.reserve(pop.size());
    for (const auto& s : pop) ids.push_back(s.id());
    return PsiMatrix::from_log(logp, ids);
}

}  // namespace npod

#include "npod/core.hpp"

#include "npod/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace npod {

const char* to_string(Route r) {
    return r == Route::oral ? "oral" : "infusion";
}

Route route_from_string(const std::string& s) {
    if (s == "infusion" || s == "iv") return Route::infusion;
    if (s == "oral") return Route::oral;
    throw DomainError("unknown dose route '" + s + "'");
}

void DoseEvent::validate() const {
    if (!std::isfinite(time) || time < 0.0) throw DomainError("dose time must be finite and >= 0");
    if (!std::isfinite(amount) || amount <= 0.0) throw DomainError("dose amount must be > 0");
    if (!std::isfinite(duration) || duration < 0.0) throw DomainError("dose duration must be >= 0");
}

void ObservationEvent::validate() const {
    if (!std::isfinite(time) || time < 0.0) throw DomainError("observation time must be finite and >= 0");
    if (!std::isfinite(value)) throw DomainError("observation value must be finite");
}

Subject::Subject(std::string id, std::vector<DoseEvent> doses, std::vector<ObservationEvent> observations)
    : id_(std::move(id)), doses_(std::move(doses)), observations_(std::move(observations)) {
    if (observations_.empty()) throw DomainError("subject '" + id_ + "' has no observations");
    for (const auto& d : doses_) d.validate();
    for (const auto& o : observations_) o.validate();
    auto by_time = [](const auto& a, const auto& b) { return a.time < b.time; };
    if (!std::is_sorted(doses_.begin(), doses_.end(), by_time) ||
        !std::is_sorted(observations_.begin(), observations_.end(), by_time))
        throw DomainError("subject '" + id_ + "' events are not sorted by time");
}

std::vector<double> Subject::observation_times() const {
    std::vector<double> t;
    t.reserve(observations_.size());
    for (const auto& o : observations_) t.push_back(o.time);
    return t;
}

Population::Population(std::vector<Subject> subjects) : subjects_(std::move(subjects)) {
    if (subjects_.empty()) throw DomainError("population must contain at least one subject");
    std::unordered_set<std::string> seen;
    for (const auto& s : subjects_)
        if (!seen.insert(s.id()).second) throw DomainError("duplicate subject id '" + s.id() + "'");
}

ParameterSpace::ParameterSpace(std::vector<std::string> names, std::vector<double> lower, std::vector<double> upper)
    : names_(std::move(names)), lower_(std::move(lower)), upper_(std::move(upper)) {
    if (names_.empty()) throw DomainError("parameter space must have at least one dimension");
    if (lower_.size() != names_.size() || upper_.size() != names_.size())
        throw DomainError("parameter space bounds do not match the number of names");
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (!std::isfinite(lower_[j]) || !std::isfinite(upper_[j]) || !(lower_[j] < upper_[j]))
            throw DomainError("parameter '" + names_[j] + "' needs finite bounds with lower < upper");
    }
}

bool ParameterSpace::contains(const SupportPoint& p) const {
    if (p.dim() != dim()) return false;
    for (std::size_t j = 0; j < dim(); ++j)
        if (!(p[j] >= lower_[j] && p[j] <= upper_[j])) return false;
    return true;
}

std::vector<double> normalize_point(const SupportPoint& theta, const ParameterSpace& space) {
    if (!space.contains(theta)) throw BoundsError("support point outside the parameter space");
    std::vector<double> u(space.dim());
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = (theta[j] - space.lower()[j]) / space.width(j);
    return u;
}

SupportPoint denormalize_point(std::span<const double> unit, const ParameterSpace& space) {
    if (unit.size() != space.dim()) throw BoundsError("unit vector dimension does not match the space");
    SupportPoint p{std::vector<double>(unit.size())};
    for (std::size_t j = 0; j < unit.size(); ++j) {
        p.coords[j] = space.lower()[j] + unit[j] * space.width(j);
        // keep the unit cube's faces exactly on the box faces despite rounding
        if (unit[j] >= 0.0 && unit[j] <= 1.0)
            p.coords[j] = std::clamp(p.coords[j], space.lower()[j], space.upper()[j]);
    }
    return p;
}

double normalized_l1(const SupportPoint& x, const SupportPoint& y, const ParameterSpace& space) {
    double d = 0.0;
    for (std::size_t j = 0; j < space.dim(); ++j) d += std::abs(x[j] - y[j]) / space.width(j);
    return d;
}

DiscreteDistribution::DiscreteDistribution(std::vector<SupportPoint> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) throw DomainError("distribution needs at least one support point");
    if (points_.size() != weights_.size()) throw DomainError("distribution points and weights differ in length");
    const std::size_t d = points_.front().dim();
    for (const auto& p : points_)
        if (p.dim() != d || d == 0) throw DomainError("support points must share a positive dimension");
    double sum = 0.0;
    for (double w : weights_) {
        if (!std::isfinite(w) || w < 0.0) throw DomainError("distribution weights must be finite and >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) throw DomainError("distribution weights must sum to 1");
}

PsiMatrix PsiMatrix::from_log(const Eigen::MatrixXd& log_density, std::span<const std::string> subject_ids) {
    const Eigen::Index n = log_density.rows();
    const Eigen::Index k = log_density.cols();
    if (n == 0 || k == 0) throw DomainError("psi matrix must be non-empty");
    Eigen::MatrixXd values(n, k);
    Eigen::VectorXd offsets(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
            const double v = log_density(i, c);
            if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
                throw DomainError("psi log density must be finite or -inf");
            m = std::max(m, v);
        }
        if (!std::isfinite(m)) {
            const std::string id = static_cast<std::size_t>(i) < subject_ids.size()
                                       ? subject_ids[static_cast<std::size_t>(i)]
                                       : std::to_string(i);
            throw InfeasibleSubjectError("subject '" + id + "' has zero likelihood at every support point", id);
        }
        offsets(i) = m;
        for (Eigen::Index c = 0; c < k; ++c) values(i, c) = std::exp(log_density(i, c) - m);
    }
    return PsiMatrix(std::move(values), std::move(offsets));
}

double PsiMatrix::log_density(std::size_t i, std::size_t k) const {
    return std::log(values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))) +
           row_log_scale_(static_cast<Eigen::Index>(i));
}

PsiMatrix PsiMatrix::select_columns(std::span<const std::size_t> columns) const {
    if (columns.empty()) throw DomainError("cannot select zero psi columns");
    const Eigen::Index n = values_.rows();
    Eigen::MatrixXd v(n, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] >= cols()) throw DomainError("psi column index out of range");
        v.col(static_cast<Eigen::Index>(c)) = values_.col(static_cast<Eigen::Index>(columns[c]));
    }
    Eigen::VectorXd off = row_log_scale_;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = v.row(i).maxCoeff();
        if (m <= 0.0) throw InfeasibleSubjectError("row " + std::to_string(i) + " vanishes on the selected columns",
                                                   std::to_string(i));
        if (m != 1.0) {
            v.row(i) /= m;
            off(i) += std::log(m);
        }
    }
    return PsiMatrix(std::move(v), std::move(off));
}

}  // namespace npod

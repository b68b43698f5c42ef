#pragma once

// Domain value types shared by every module. All of them validate their
// invariants on construction and are immutable afterwards.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace npod {

enum class Route { infusion, oral };

const char* to_string(Route r);
Route route_from_string(const std::string& s);

struct DoseEvent {
    double time = 0.0;      // hours
    double amount = 0.0;    // drug units
    double duration = 0.0;  // hours, 0 is an instantaneous bolus
    Route route = Route::infusion;

    void validate() const;
    friend bool operator==(const DoseEvent&, const DoseEvent&) = default;
};

struct ObservationEvent {
    double time = 0.0;
    double value = 0.0;
    int output_index = 0;

    void validate() const;
    friend bool operator==(const ObservationEvent&, const ObservationEvent&) = default;
};

class Subject {
public:
    Subject(std::string id, std::vector<DoseEvent> doses, std::vector<ObservationEvent> observations);

    const std::string& id() const noexcept { return id_; }
    const std::vector<DoseEvent>& doses() const noexcept { return doses_; }
    const std::vector<ObservationEvent>& observations() const noexcept { return observations_; }
    std::vector<double> observation_times() const;

    friend bool operator==(const Subject&, const Subject&) = default;

private:
    std::string id_;
    std::vector<DoseEvent> doses_;
    std::vector<ObservationEvent> observations_;
};

class Population {
public:
    explicit Population(std::vector<Subject> subjects);

    std::size_t size() const noexcept { return subjects_.size(); }
    const Subject& operator[](std::size_t i) const { return subjects_[i]; }
    const std::vector<Subject>& subjects() const noexcept { return subjects_; }
    auto begin() const { return subjects_.begin(); }
    auto end() const { return subjects_.end(); }

    friend bool operator==(const Population&, const Population&) = default;

private:
    std::vector<Subject> subjects_;
};

struct SupportPoint {
    std::vector<double> coords;

    std::size_t dim() const noexcept { return coords.size(); }
    double operator[](std::size_t j) const { return coords[j]; }
    friend bool operator==(const SupportPoint&, const SupportPoint&) = default;
};

// The bounded box [lower, upper] that support points live in.
class ParameterSpace {
public:
    ParameterSpace(std::vector<std::string> names, std::vector<double> lower, std::vector<double> upper);

    std::size_t dim() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    double width(std::size_t j) const { return upper_[j] - lower_[j]; }
    bool contains(const SupportPoint& p) const;

private:
    std::vector<std::string> names_;
    std::vector<double> lower_;
    std::vector<double> upper_;
};

// Maps a point into the unit cube. Throws BoundsError when outside the box.
std::vector<double> normalize_point(const SupportPoint& theta, const ParameterSpace& space);
SupportPoint denormalize_point(std::span<const double> unit, const ParameterSpace& space);

// Normalized L1 distance: sum_j |x_j - y_j| / (b_j - a_j).
double normalized_l1(const SupportPoint& x, const SupportPoint& y, const ParameterSpace& space);

class DiscreteDistribution {
public:
    static constexpr double kSimplexTolerance = 1e-10;

    DiscreteDistribution(std::vector<SupportPoint> points, std::vector<double> weights);

    std::size_t size() const noexcept { return points_.size(); }
    std::size_t dim() const noexcept { return points_.front().dim(); }
    const std::vector<SupportPoint>& points() const noexcept { return points_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

private:
    std::vector<SupportPoint> points_;
    std::vector<double> weights_;
};

// N x K matrix of conditional likelihoods p(Y_i | theta_k), each row scaled so
// its maximum is 1. The true log density is log(values(i,k)) + row_log_scale(i).
class PsiMatrix {
public:
    // Scales an N x K matrix of log densities row by row. Throws
    // InfeasibleSubjectError when a row is entirely -inf.
    static PsiMatrix from_log(const Eigen::MatrixXd& log_density, std::span<const std::string> subject_ids = {});

    std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    const Eigen::VectorXd& row_log_scale() const noexcept { return row_log_scale_; }
    double log_density(std::size_t i, std::size_t k) const;

    // Keeps the listed columns (in the given order) and re-scales rows.
    PsiMatrix select_columns(std::span<const std::size_t> columns) const;

private:
    PsiMatrix(Eigen::MatrixXd values, Eigen::VectorXd offsets)
        : values_(std::move(values)), row_log_scale_(std::move(offsets)) {}

    Eigen::MatrixXd values_;
    Eigen::VectorXd row_log_scale_;
};

struct CycleRecord {
    int cycle = 0;
    double log_likelihood = 0.0;
    std::size_t n_points_after_reduce = 0;
    std::int64_t wall_time_ms = 0;
};

}  // namespace npod

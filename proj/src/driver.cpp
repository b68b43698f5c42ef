#include "npod/driver.hpp"

#include "npod/parallel.hpp"
#include "npod/sampling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace npod {

void FitConfig::validate() const {
    if (init_points < 1) throw DomainError("init_points must be >= 1");
    if (max_cycles < 0) throw DomainError("max_cycles must be >= 0");
    if (!(delta_f > 0.0)) throw DomainError("delta_f must be > 0");
    if (!(weights.tol > 0.0)) throw DomainError("weight tolerance must be > 0");
    if (weights.max_iterations < 1) throw DomainError("weight max_iterations must be >= 1");
    refinement.validate();
}

namespace {

template <typename T>
std::vector<T> pick(const std::vector<T>& v, std::span<const std::size_t> idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

std::vector<double> normalized(std::vector<double> w) {
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= s;
    return w;
}

struct CycleState {
    std::vector<SupportPoint> points;
    PsiMatrix psi;
    WeightSolution solution;
};

CycleState run_cycle(const std::vector<SupportPoint>& grid, const Population& pop, const ModelSpec& model,
                     const ErrorModel& error, const FitConfig& cfg) {
    const auto psi = build_psi(pop, grid, model, error, cfg.threads);
    const auto first = pdip_weights(psi, cfg.weights);
    const auto keep = condense(first.weights, cfg.refinement.delta_lambda);
    const auto condensed = psi.select_columns(keep);
    auto red = reduce(condensed, pick(grid, keep), cfg.refinement.qr_ratio_threshold);
    auto second = pdip_weights(red.psi, cfg.weights);
    return {std::move(red.points), std::move(red.psi), std::move(second)};
}

}  // namespace

FitResult fit_npod(const Population& pop, const ParameterSpace& space, const ModelSpec& model,
                   const ErrorModel& error, const FitConfig& cfg) {
    cfg.validate();
    error.validate();
    if (model.free_dim() != space.dim()) throw DomainError("model and parameter space dimensions differ");

    const PopulationLikelihood lik(pop, model, error);
    std::vector<SupportPoint> grid =
        init_grid(space, cfg.init_points,
                  cfg.scramble ? std::optional<std::uint32_t>(static_cast<std::uint32_t>(cfg.seed)) : std::nullopt);

    std::vector<CycleRecord> log;
    double prev = -std::numeric_limits<double>::infinity();
    bool converged = false;
    std::optional<CycleState> state;

    for (int cycle = 1;; ++cycle) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            state = run_cycle(grid, pop, model, error, cfg);
        } catch (const Error& e) {
            throw FitError("cycle " + std::to_string(cycle) + ": " + e.what(), cycle, log, std::current_exception());
        }
        const double ll = state->solution.log_likelihood;
        const bool small = std::abs(ll - prev) < cfg.delta_f;
        prev = ll;

        bool added = false;
        if (cycle <= cfg.max_cycles) {
            try {
                auto expanded = dopt(state->points, state->solution.weights, state->psi, space, cfg.refinement, lik,
                                     cfg.threads);
                added = expanded.size() > state->points.size();
                grid = std::move(expanded);
            } catch (const Error& e) {
                throw FitError("cycle " + std::to_string(cycle) + " (dopt): " + e.what(), cycle, log,
                               std::current_exception());
            }
        }
        const auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
        log.push_back({cycle, ll, state->points.size(), static_cast<std::int64_t>(ms)});

        if (cycle > cfg.max_cycles) break;
        if (small && !added) {
            converged = true;
            break;
        }
    }

    return FitResult{DiscreteDistribution(state->points, normalized(state->solution.weights)),
                     state->solution.log_likelihood, std::move(log), converged, std::nullopt};
}

FixedGridResult fixed_grid_npml(const Population& pop, const ParameterSpace& space, std::size_t grid_size,
                                const ModelSpec& model, const ErrorModel& error, const FitConfig& cfg) {
    if (grid_size < 1) throw DomainError("grid_size must be >= 1");
    const auto grid =
        init_grid(space, grid_size,
                  cfg.scramble ? std::optional<std::uint32_t>(static_cast<std::uint32_t>(cfg.seed)) : std::nullopt);
    const auto psi = build_psi(pop, grid, model, error, cfg.threads);
    auto sol = pdip_weights(psi, cfg.weights);
    const auto keep = condense(sol.weights, cfg.refinement.delta_lambda);
    const double ll = sol.log_likelihood;
    return FixedGridResult{DiscreteDistribution(pick(grid, keep), normalized(pick(sol.weights, keep))), ll,
                           std::move(sol)};
}

std::vector<double> d_at(const DiscreteDistribution& dist, std::span<const SupportPoint> probes,
                         const Population& pop, const ModelSpec& model, const ErrorModel& error, unsigned threads) {
    const PopulationLikelihood lik(pop, model, error);
    const auto psi = build_psi(pop, dist.points(), model, error, threads);
    const auto log_mix = log_mixture_density(psi, dist.weights());
    std::vector<double> d(probes.size());
    parallel_for(probes.size(), threads, [&](std::size_t k) { d[k] = d_function(probes[k], log_mix, lik); });
    return d;
}

OptimalityCertificate optimality_check(const DiscreteDistribution& dist, const Population& pop,
                                       const ParameterSpace& space, const ModelSpec& model, const ErrorModel& error,
                                       std::size_t n_probes, unsigned threads, std::uint32_t probe_seed) {
    std::vector<SupportPoint> probes;
    if (n_probes > 0) probes = init_grid(space, n_probes, probe_seed);
    probes.insert(probes.end(), dist.points().begin(), dist.points().end());
    const auto d = d_at(dist, probes, pop, model, error, threads);

    OptimalityCertificate cert;
    cert.n_probes = n_probes;
    cert.max_d_probe = *std::max_element(d.begin(), d.end());
    for (std::size_t k = n_probes; k < d.size(); ++k) cert.max_abs_d_support = std::max(cert.max_abs_d_support, std::abs(d[k]));
    return cert;
}

WeightedStats weighted_stats(const DiscreteDistribution& dist) {
    const std::size_t d = dist.dim(), k = dist.size();
    const auto& w = dist.weights();
    const auto& pts = dist.points();
    WeightedStats s;
    s.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += w[i] * pts[i][j];
    s.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                s.covariance(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
                    w[i] * (pts[i][a] - s.mean[a]) * (pts[i][b] - s.mean[b]);
    s.variance.resize(d);
    for (std::size_t j = 0; j < d; ++j) s.variance[j] = s.covariance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));

    s.median.resize(d);
    std::vector<std::size_t> order(k);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pts[a][j] < pts[b][j]; });
        double cum = 0.0;
        s.median[j] = pts[order.back()][j];
        for (auto i : order) {
            cum += w[i];
            if (cum >= 0.5 - 1e-12) {
                s.median[j] = pts[i][j];
                break;
            }
        }
    }
    return s;
}

}  // namespace npod

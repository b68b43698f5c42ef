#include "npod/refine.hpp"

#include "npod/errors.hpp"
#include "npod/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace npod {

void RefinementConfig::validate() const {
    if (!(delta_lambda > 0.0)) throw DomainError("delta_lambda must be > 0");
    if (!(qr_ratio_threshold > 0.0)) throw DomainError("qr_ratio_threshold must be > 0");
    if (!(delta_d > 0.0)) throw DomainError("delta_d must be > 0");
    if (nm_steps < 0) throw DomainError("nm_steps must be >= 0");
    if (!(nm_initial_spread > 0.0) || nm_initial_spread > 1.0) throw DomainError("nm_initial_spread must be in (0, 1]");
    if (!(nm_relative_spread >= 0.0) || nm_relative_spread > 1.0)
        throw DomainError("nm_relative_spread must be in [0, 1]");
}

std::vector<double> simplex_spread(const SupportPoint& theta, const ParameterSpace& space,
                                   const RefinementConfig& cfg) {
    std::vector<double> spread(space.dim(), cfg.nm_initial_spread);
    if (cfg.nm_relative_spread > 0.0)
        for (std::size_t j = 0; j < space.dim(); ++j) {
            const double s = cfg.nm_relative_spread * std::abs(theta[j]) / space.width(j);
            spread[j] = std::min(1.0, s > 0.0 ? s : cfg.nm_relative_spread);
        }
    return spread;
}

std::vector<std::size_t> condense(std::span<const double> weights, double delta_lambda) {
    if (weights.empty()) return {};
    const double cut = *std::max_element(weights.begin(), weights.end()) * delta_lambda;
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < weights.size(); ++k)
        if (weights[k] > cut) keep.push_back(k);
    return keep;
}

std::vector<std::size_t> reduce_columns(const Eigen::MatrixXd& psi, double threshold,
                                        std::vector<std::size_t>* zero_norm) {
    const Eigen::Index n = psi.rows();
    const Eigen::Index k = psi.cols();
    std::vector<Eigen::Index> nonzero;
    for (Eigen::Index c = 0; c < k; ++c) {
        if (psi.col(c).norm() > 0.0)
            nonzero.push_back(c);
        else if (zero_norm)
            zero_norm->push_back(static_cast<std::size_t>(c));
    }
    if (nonzero.empty()) return {};

    const auto m = static_cast<Eigen::Index>(nonzero.size());
    Eigen::MatrixXd normed(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto col = psi.col(nonzero[static_cast<std::size_t>(j)]);
        normed.col(j) = col / col.norm();
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normed);
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    const auto& perm = qr.colsPermutation().indices();

    std::vector<std::size_t> keep;
    for (Eigen::Index i = 0; i < std::min(n, m); ++i) {
        const double col_norm = r.col(i).head(i + 1).norm();
        if (col_norm > 0.0 && std::abs(r(i, i)) / col_norm > threshold)
            keep.push_back(static_cast<std::size_t>(nonzero[static_cast<std::size_t>(perm(i))]));
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

ReduceResult reduce(const PsiMatrix& psi, std::span<const SupportPoint> points, double threshold) {
    if (points.size() != psi.cols()) throw DomainError("reduce: psi columns and points differ in count");
    std::vector<std::size_t> zero;
    auto keep = reduce_columns(psi.values(), threshold, &zero);
    if (keep.empty()) throw DegeneratePsiError("reduce removed every support point");
    std::vector<std::string> warnings;
    for (auto z : zero) warnings.push_back("dropped support point " + std::to_string(z) + " with zero psi column");
    std::vector<SupportPoint> kept_points;
    kept_points.reserve(keep.size());
    for (auto c : keep) kept_points.push_back(points[c]);
    return ReduceResult{std::move(kept_points), psi.select_columns(keep), std::move(keep), std::move(warnings)};
}

std::vector<double> log_mixture_density(const PsiMatrix& psi, std::span<const double> weights) {
    if (weights.size() != psi.cols()) throw DomainError("weights do not match psi columns");
    const Eigen::Map<const Eigen::VectorXd> lam(weights.data(), static_cast<Eigen::Index>(weights.size()));
    const Eigen::VectorXd p = psi.values() * lam;
    std::vector<double> out(psi.rows());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = p(static_cast<Eigen::Index>(i));
        if (!(v > 0.0)) throw InfeasibleSubjectError("mixture density vanishes for subject " + std::to_string(i),
                                                     std::to_string(i));
        out[i] = std::log(v) + psi.row_log_scale()(static_cast<Eigen::Index>(i));
    }
    return out;
}

double d_function(std::span<const double> log_density_xi, std::span<const double> log_mixture) {
    if (log_density_xi.size() != log_mixture.size()) throw DomainError("d_function: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < log_mixture.size(); ++i) s += std::exp(log_density_xi[i] - log_mixture[i]);
    return s - static_cast<double>(log_mixture.size());
}

double d_function(const SupportPoint& xi, std::span<const double> log_mixture, const PopulationLikelihood& lik) {
    return d_function(lik.all(xi), log_mixture);
}

double d_function(const SupportPoint& xi, std::span<const double> log_mixture, const Population& pop,
                  const ModelSpec& m, const ErrorModel& e) {
    return d_function(xi, log_mixture, PopulationLikelihood(pop, m, e));
}

NelderMeadResult nelder_mead_t(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                               int steps, double spread) {
    return nelder_mead_t(f, x0, steps, std::vector<double>(x0.size(), spread));
}

NelderMeadResult nelder_mead_t(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                               int steps, std::span<const double> spread) {
    constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
    const std::size_t n = x0.size();
    NelderMeadResult out;
    auto clamp01 = [](std::vector<double>& x) {
        for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    };
    auto eval = [&](const std::vector<double>& x) {
        ++out.evaluations;
        return f(x);
    };
    clamp01(x0);
    if (steps <= 0) {
        out.value = eval(x0);
        out.x = std::move(x0);
        return out;
    }

    std::vector<std::vector<double>> v(n + 1, x0);
    for (std::size_t j = 0; j < n; ++j) {
        v[j + 1][j] = x0[j] + spread[j] <= 1.0 ? x0[j] + spread[j] : x0[j] - spread[j];
        clamp01(v[j + 1]);
    }
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(v[i]);

    std::vector<std::size_t> order(n + 1);
    auto along = [&](const std::vector<double>& from, const std::vector<double>& to, double t) {
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = from[j] + t * (to[j] - from[j]);
        clamp01(x);
        return x;
    };

    for (int it = 0; it < steps; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] > fv[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

        std::vector<double> c(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t j = 0; j < n; ++j) c[j] += v[i][j] / static_cast<double>(n);

        auto replace_worst = [&](std::vector<double> x, double fx) {
            v[worst] = std::move(x);
            fv[worst] = fx;
        };

        // c + a (c - worst) is the point at parameter -a on the segment c -> worst.
        auto xr = along(c, v[worst], -kReflect);
        const double fr = eval(xr);
        if (fr > fv[best]) {
            auto xe = along(c, xr, kExpand);
            const double fe = eval(xe);
            if (fe > fr)
                replace_worst(std::move(xe), fe);
            else
                replace_worst(std::move(xr), fr);
            continue;
        }
        if (fr > fv[second]) {
            replace_worst(std::move(xr), fr);
            continue;
        }
        if (fr > fv[worst]) {
            auto xc = along(c, xr, kContract);
            const double fc = eval(xc);
            if (fc >= fr) {
                replace_worst(std::move(xc), fc);
                continue;
            }
        } else {
            auto xc = along(c, v[worst], kContract);
            const double fc = eval(xc);
            if (fc > fv[worst]) {
                replace_worst(std::move(xc), fc);
                continue;
            }
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            v[i] = along(v[best], v[i], kShrink);
            fv[i] = eval(v[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::max_element(fv.begin(), fv.end()) - fv.begin());
    out.x = v[best];
    out.value = fv[best];
    return out;
}

std::vector<SupportPoint> dopt(std::span<const SupportPoint> points, std::span<const double> weights,
                               const PsiMatrix& psi, const ParameterSpace& space, const RefinementConfig& cfg,
                               const PopulationLikelihood& lik, unsigned threads) {
    if (points.size() != weights.size() || points.size() != psi.cols())
        throw DomainError("dopt: points, weights and psi disagree in size");
    const auto log_mix = log_mixture_density(psi, weights);

    std::vector<SupportPoint> candidates(points.size());
    auto objective = [&](std::span<const double> u) { return d_function(denormalize_point(u, space), log_mix, lik); };
    parallel_for(points.size(), threads, [&](std::size_t k) {
        auto res = nelder_mead_t(objective, normalize_point(points[k], space), cfg.nm_steps, simplex_spread(points[k], space, cfg));
        candidates[k] = denormalize_point(res.x, space);
    });

    std::vector<SupportPoint> out(points.begin(), points.end());
    for (auto& cand : candidates) {
        double dist = std::numeric_limits<double>::infinity();
        for (const auto& p : out) dist = std::min(dist, normalized_l1(cand, p, space));
        double up = std::numeric_limits<double>::infinity(), down = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < space.dim(); ++j) {
            up = std::min(up, cand[j] - space.lower()[j]);
            down = std::min(down, space.upper()[j] - cand[j]);
        }
        if (dist > cfg.delta_d && up >= 0.0 && down >= 0.0) out.push_back(std::move(cand));
    }
    return out;
}

}  // namespace npod

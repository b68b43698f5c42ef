#include "npod/weights.hpp"

#include "npod/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace npod {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kFractionToBoundary = 0.99;

double sum_log(const VectorXd& v) {
    double s = 0.0;
    for (Index i = 0; i < v.size(); ++i) s += std::log(v(i));
    return s;
}

// Largest alpha keeping x + alpha*dx >= 0 (infinity when dx >= 0).
double max_step(const VectorXd& x, const VectorXd& dx) {
    double a = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < x.size(); ++i)
        if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
    return a;
}

std::vector<double> to_std(const VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

// Interior-point phase. Works on the scaled problem
//   max sum_i log((Psi lam)_i) - sum_k lam_k,  lam >= 0,
// whose solution satisfies sum(lam) = N. Dual variables: w = 1/(Psi lam),
// slack y = 1 - Psi^T w, complementarity lam .* y = mu.
VectorXd interior_point(const MatrixXd& psi, const WeightOptions& opt, int& iterations) {
    const Index n = psi.rows();
    const Index k = psi.cols();
    VectorXd lam = VectorXd::Ones(k);
    VectorXd plam = psi * lam;
    VectorXd w = plam.cwiseInverse();
    VectorXd ptw = psi.transpose() * w;
    const double shrink = 2.0 * ptw.maxCoeff();
    lam *= shrink;
    plam *= shrink;
    w /= shrink;
    ptw /= shrink;
    VectorXd y = VectorXd::Ones(k) - ptw;

    const double eps = opt.tol;
    VectorXd best = lam;
    double best_mu = std::numeric_limits<double>::infinity();

    for (iterations = 0; iterations < opt.max_iterations; ++iterations) {
        const double mu = lam.dot(y) / static_cast<double>(k);
        const double norm_r = (VectorXd::Ones(n) - w.cwiseProduct(plam)).cwiseAbs().maxCoeff();
        const double slp = sum_log(plam);
        const double gap = std::abs(sum_log(w) + slp) / (1.0 + std::abs(slp));
        if (mu < best_mu) {
            best_mu = mu;
            best = lam;
        }
        if (mu <= eps && norm_r <= eps && gap <= eps) return lam;

        const VectorXd d = lam.cwiseQuotient(y);
        const MatrixXd b = psi * d.cwiseSqrt().asDiagonal();
        MatrixXd h = b * b.transpose();
        h.diagonal() += plam.cwiseQuotient(w);
        Eigen::LLT<MatrixXd> chol(h);
        if (chol.info() != Eigen::Success) throw DegeneratePsiError("weight optimizer Newton system is not positive definite");

        // Solves the reduced Newton system for complementarity target c.
        auto direction = [&](const VectorXd& c, VectorXd& dlam, VectorXd& dw, VectorXd& dy) {
            const VectorXd cy = c.cwiseQuotient(y);
            dw = chol.solve(w.cwiseInverse() - psi * cy);
            dy = -(psi.transpose() * dw);
            dlam = cy - lam - d.cwiseProduct(dy);
        };

        VectorXd dlam, dw, dy;
        direction(VectorXd::Zero(k), dlam, dw, dy);
        const double ap_aff = std::min(1.0, max_step(lam, dlam));
        const double ad_aff = std::min({1.0, max_step(w, dw), max_step(y, dy)});
        const double mu_aff = (lam + ap_aff * dlam).dot(y + ad_aff * dy) / static_cast<double>(k);
        const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

        const VectorXd c = VectorXd::Constant(k, sigma * mu) - dlam.cwiseProduct(dy);
        direction(c, dlam, dw, dy);
        const double ap = std::min(1.0, kFractionToBoundary * max_step(lam, dlam));
        const double ad = std::min(1.0, kFractionToBoundary * std::min(max_step(w, dw), max_step(y, dy)));
        lam += ap * dlam;
        w += ad * dw;
        y += ad * dy;
        if (!lam.allFinite() || !w.allFinite() || !y.allFinite() || lam.minCoeff() <= 0.0 || w.minCoeff() <= 0.0 ||
            y.minCoeff() <= 0.0)
            throw DegeneratePsiError("weight optimizer iterate left the interior");
        plam = psi * lam;
    }
    throw ConvergenceError("interior point did not converge in " + std::to_string(opt.max_iterations) +
                               " iterations",
                           to_std(best / best.sum()), std::numeric_limits<double>::quiet_NaN());
}

// Active-set Newton refinement of simplex weights x on the support they
// imply. Drives the gradient to exactly N on the support and <= N off it.
bool polish(const MatrixXd& psi, VectorXd& x, double tol, int max_iter) {
    const double n = static_cast<double>(psi.rows());
    const Index k = psi.cols();
    const double inner_tol = 0.1 * tol;
    const double keep = 1e-7 * x.maxCoeff();
    std::vector<Index> active;
    for (Index c = 0; c < k; ++c) {
        if (x(c) > keep)
            active.push_back(c);
        else
            x(c) = 0.0;
    }
    x /= x.sum();

    for (int it = 0; it < max_iter; ++it) {
        const VectorXd p = psi * x;
        if (p.minCoeff() <= 0.0) return false;
        const VectorXd g = psi.transpose() * p.cwiseInverse();

        double resid_active = 0.0;
        for (Index c : active) resid_active = std::max(resid_active, std::abs(g(c) - n));
        Index violator = -1;
        double worst = inner_tol;
        for (Index c = 0; c < k; ++c) {
            if (x(c) > 0.0 || std::find(active.begin(), active.end(), c) != active.end()) continue;
            if (g(c) - n > worst) {
                worst = g(c) - n;
                violator = c;
            }
        }
        if (resid_active <= inner_tol) {
            if (violator < 0) return true;
            active.push_back(violator);
            continue;
        }

        const auto m = static_cast<Index>(active.size());
        MatrixXd sub(psi.rows(), m);
        VectorXd gs(m);
        for (Index j = 0; j < m; ++j) {
            sub.col(j) = psi.col(active[static_cast<std::size_t>(j)]);
            gs(j) = g(active[static_cast<std::size_t>(j)]);
        }
        const MatrixXd scaled = p.cwiseInverse().asDiagonal() * sub;
        MatrixXd kkt = MatrixXd::Zero(m + 1, m + 1);
        kkt.topLeftCorner(m, m) = scaled.transpose() * scaled;
        kkt.block(0, m, m, 1).setOnes();
        kkt.block(m, 0, 1, m).setOnes();
        VectorXd rhs(m + 1);
        rhs << gs, 0.0;
        const VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        if (!sol.allFinite()) return false;
        VectorXd dir = sol.head(m);
        dir.array() -= dir.mean();  // exact tangency to the simplex

        VectorXd xs(m);
        for (Index j = 0; j < m; ++j) xs(j) = x(active[static_cast<std::size_t>(j)]);
        double alpha_max = std::numeric_limits<double>::infinity();
        Index blocking = -1;
        for (Index j = 0; j < m; ++j) {
            if (dir(j) < 0.0 && -xs(j) / dir(j) < alpha_max) {
                alpha_max = -xs(j) / dir(j);
                blocking = j;
            }
        }
        double alpha = std::min(1.0, alpha_max);
        const double f0 = sum_log(p);
        const double slope = gs.dot(dir);
        if (!(slope > 0.0)) return false;
        // Steps whose predicted gain is below rounding of f are accepted on non-decrease.
        const double noise = 1e-12 * (1.0 + std::abs(f0));
        VectorXd trial;
        bool accepted = false;
        for (int ls = 0; ls < 60 && !accepted; ++ls) {
            trial = xs + alpha * dir;
            const VectorXd pt = sub * trial.cwiseMax(0.0);
            if (pt.minCoeff() > 0.0) {
                const double f1 = sum_log(pt);
                accepted = f1 >= f0 + 1e-4 * alpha * slope || (alpha * slope < noise && f1 >= f0 - noise);
            }
            if (!accepted) alpha *= 0.5;
        }
        if (!accepted) return false;
        for (Index j = 0; j < m; ++j) x(active[static_cast<std::size_t>(j)]) = std::max(0.0, trial(j));
        if (blocking >= 0 && alpha == alpha_max) {
            x(active[static_cast<std::size_t>(blocking)]) = 0.0;
            active.erase(active.begin() + blocking);
        }
        x /= x.sum();
    }
    return false;
}

WeightSolution solve(const MatrixXd& psi, const WeightOptions& opt) {
    if (psi.rows() == 0 || psi.cols() == 0) throw DomainError("psi must be non-empty");
    if (!psi.allFinite() || psi.minCoeff() < 0.0) throw DomainError("psi entries must be finite and >= 0");
    for (Index i = 0; i < psi.rows(); ++i)
        if (psi.row(i).maxCoeff() <= 0.0) throw DegeneratePsiError("psi row " + std::to_string(i) + " is all zero");

    WeightSolution out;
    if (psi.cols() == 1) {
        out.weights = {1.0};
        out.log_likelihood = sum_log(psi.col(0));
        out.kkt_residual = 0.0;
        return out;
    }

    int iters = 0;
    VectorXd lam = interior_point(psi, opt, iters);
    VectorXd x = lam / lam.sum();
    const VectorXd ipm = x;
    if (!polish(psi, x, opt.tol, 100)) x = ipm;

    double resid = kkt_residual(psi, x, opt.tol);
    if (resid > opt.tol) {
        const double ipm_resid = kkt_residual(psi, ipm, opt.tol);
        if (ipm_resid < resid) {
            x = ipm;
            resid = ipm_resid;
        }
        throw ConvergenceError("weight optimizer KKT residual " + std::to_string(resid) + " exceeds tolerance",
                               to_std(x), resid);
    }
    out.weights = to_std(x);
    out.log_likelihood = sum_log(psi * x);
    out.kkt_residual = resid;
    out.iterations = iters;
    return out;
}

}  // namespace

Eigen::VectorXd mixture_gradient(const Eigen::MatrixXd& psi, const Eigen::VectorXd& lambda) {
    return psi.transpose() * (psi * lambda).cwiseInverse();
}

double kkt_residual(const Eigen::MatrixXd& psi, const Eigen::VectorXd& lambda, double support_tol) {
    const double n = static_cast<double>(psi.rows());
    const VectorXd g = mixture_gradient(psi, lambda);
    double r = 0.0;
    for (Index c = 0; c < g.size(); ++c) {
        r = std::max(r, g(c) - n);
        if (lambda(c) > support_tol) r = std::max(r, n - g(c));
    }
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

WeightSolution pdip_weights(const Eigen::MatrixXd& psi, WeightOptions opt) {
    return solve(psi, opt);
}

WeightSolution pdip_weights(const PsiMatrix& psi, WeightOptions opt) {
    auto sol = solve(psi.values(), opt);
    sol.log_likelihood += psi.row_log_scale().sum();
    return sol;
}

double mixture_log_likelihood(const PsiMatrix& psi, const std::vector<double>& lambda) {
    if (lambda.size() != psi.cols()) throw DomainError("weight vector length does not match psi");
    const Eigen::Map<const VectorXd> lam(lambda.data(), static_cast<Index>(lambda.size()));
    return sum_log(psi.values() * lam) + psi.row_log_scale().sum();
}

}  // namespace npod

#include "npod/models.hpp"

#include "npod/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace npod {

namespace {

std::string describe(std::span<const double> theta) {
    std::ostringstream os;
    os << '(';
    for (std::size_t j = 0; j < theta.size(); ++j) os << (j ? ", " : "") << theta[j];
    os << ')';
    return os.str();
}

void require_sorted_times(std::span<const double> times) {
    if (!std::is_sorted(times.begin(), times.end())) throw DomainError("prediction times must be sorted");
}

void check_arity(ModelKind kind, std::span<const double> theta) {
    if (theta.size() != model_parameter_names(kind).size())
        throw DomainError(std::string("model ") + to_string(kind) + " expects " +
                          std::to_string(model_parameter_names(kind).size()) + " parameters");
}

void check_one_comp(std::span<const double> theta, std::span<const DoseEvent> doses) {
    check_arity(ModelKind::one_comp_iv, theta);
    if (!(theta[0] > 0.0) || !(theta[1] > 0.0))
        throw DomainError("one_comp_iv requires Ke > 0 and Vd > 0, got " + describe(theta));
    for (const auto& d : doses)
        if (d.route != Route::infusion) throw DomainError("one_comp_iv accepts infusion/bolus doses only");
}

void check_two_comp(std::span<const double> theta, std::span<const DoseEvent> doses) {
    check_arity(ModelKind::two_comp_oral_lag, theta);
    if (!(theta[0] > 0.0) || !(theta[1] > 0.0) || !(theta[2] > 0.0) || !(theta[3] >= 0.0))
        throw DomainError("two_comp_oral_lag requires Ka, Ke, Vd > 0 and tlag >= 0, got " + describe(theta));
    for (const auto& d : doses) {
        if (d.route != Route::oral) throw DomainError("two_comp_oral_lag accepts oral doses only");
        if (d.duration != 0.0) throw DomainError("oral doses must have zero duration");
    }
}

// Amount remaining from a single one-compartment dose, evaluated at dt = t - t0 >= 0.
double one_comp_amount(const DoseEvent& d, double ke, double dt) {
    if (d.duration == 0.0) return d.amount * std::exp(-ke * dt);
    const double rate = d.amount / d.duration;
    if (dt <= d.duration) return -(rate / ke) * std::expm1(-ke * dt);
    return -(rate / ke) * std::expm1(-ke * d.duration) * std::exp(-ke * (dt - d.duration));
}

// Central concentration from one oral dose, tau measured from dose time + lag.
double oral_concentration(double amount, double ka, double ke, double vd, double tau) {
    if (tau <= 0.0) return 0.0;
    if (std::abs(ka - ke) / ke < 1e-8) return amount * ke * tau / vd * std::exp(-ke * tau);
    // exp(-ke t) - exp(-ka t) written around the slower rate so neither factor overflows.
    const double slow = std::min(ka, ke);
    const double gap = std::max(ka, ke) - slow;
    const double diff = std::exp(-slow * tau) * -std::expm1(-gap * tau) / gap;
    return amount * ka / vd * diff;
}

}  // namespace

const char* to_string(ModelKind k) {
    return k == ModelKind::one_comp_iv ? "one_comp_iv" : "two_comp_oral_lag";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "one_comp_iv") return ModelKind::one_comp_iv;
    if (s == "two_comp_oral_lag") return ModelKind::two_comp_oral_lag;
    throw DomainError("unknown model kind '" + s + "'");
}

const std::vector<std::string>& model_parameter_names(ModelKind k) {
    static const std::vector<std::string> one{"Ke", "Vd"};
    static const std::vector<std::string> two{"Ka", "Ke", "Vd", "tlag"};
    return k == ModelKind::one_comp_iv ? one : two;
}

std::vector<DoseEvent> merge_doses(std::span<const DoseEvent> doses) {
    std::vector<DoseEvent> out;
    out.reserve(doses.size());
    for (const auto& d : doses) {
        auto same = std::find_if(out.begin(), out.end(), [&](const DoseEvent& e) {
            return e.time == d.time && e.route == d.route && e.duration == d.duration;
        });
        if (same != out.end())
            same->amount += d.amount;
        else
            out.push_back(d);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    return out;
}

Trajectory predict_one_comp_iv(std::span<const double> theta, std::span<const DoseEvent> doses,
                               std::span<const double> times) {
    check_one_comp(theta, doses);
    require_sorted_times(times);
    const double ke = theta[0];
    const double vd = theta[1];
    const auto merged = merge_doses(doses);
    Trajectory out{{times.begin(), times.end()}, std::vector<double>(times.size(), 0.0)};
    for (std::size_t j = 0; j < times.size(); ++j) {
        double amount = 0.0;
        for (const auto& d : merged)
            if (times[j] >= d.time) amount += one_comp_amount(d, ke, times[j] - d.time);
        out.predictions[j] = amount / vd;
    }
    return out;
}

Trajectory predict_two_comp_oral_lag(std::span<const double> theta, std::span<const DoseEvent> doses,
                                     std::span<const double> times) {
    check_two_comp(theta, doses);
    require_sorted_times(times);
    const double ka = theta[0], ke = theta[1], vd = theta[2], lag = theta[3];
    const auto merged = merge_doses(doses);
    Trajectory out{{times.begin(), times.end()}, std::vector<double>(times.size(), 0.0)};
    for (std::size_t j = 0; j < times.size(); ++j) {
        double c = 0.0;
        for (const auto& d : merged) c += oral_concentration(d.amount, ka, ke, vd, times[j] - d.time - lag);
        out.predictions[j] = c;
    }
    return out;
}

Trajectory integrate_ode(ModelKind kind, std::span<const double> theta, std::span<const DoseEvent> doses,
                         std::span<const double> times, OdeTolerances tol) {
    if (!(tol.rtol > 0.0) || !(tol.atol > 0.0)) throw DomainError("ODE tolerances must be positive");
    require_sorted_times(times);
    if (kind == ModelKind::one_comp_iv)
        check_one_comp(theta, doses);
    else
        check_two_comp(theta, doses);

    using State = std::vector<double>;
    const auto merged = merge_doses(doses);
    const bool oral = kind == ModelKind::two_comp_oral_lag;
    const double lag = oral ? theta[3] : 0.0;
    const double vd = oral ? theta[2] : theta[1];

    // Breakpoints: every instant where the right-hand side or the state jumps,
    // plus every requested output time.
    std::vector<double> breaks(times.begin(), times.end());
    for (const auto& d : merged) {
        breaks.push_back(d.time + lag);
        if (d.duration > 0.0) breaks.push_back(d.time + d.duration);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    auto infusion_rate = [&](double t) {
        double r = 0.0;
        for (const auto& d : merged)
            if (d.duration > 0.0 && t >= d.time && t < d.time + d.duration) r += d.amount / d.duration;
        return r;
    };

    State x(oral ? 2 : 1, 0.0);
    double t_cur = 0.0;
    Trajectory out{{times.begin(), times.end()}, std::vector<double>(times.size(), 0.0)};
    std::size_t next_out = 0;
    auto stepper = boost::numeric::odeint::make_controlled(tol.atol, tol.rtol,
                                                           boost::numeric::odeint::runge_kutta_dopri5<State>());

    for (double tb : breaks) {
        if (tb > t_cur) {
            const double rate = infusion_rate(t_cur);
            const bool quiescent = rate == 0.0 && std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
            if (!quiescent) {
                auto rhs = [&](const State& s, State& dsdt, double) {
                    if (oral) {
                        dsdt[0] = -theta[0] * s[0];
                        dsdt[1] = theta[0] * s[0] - theta[1] * s[1];
                    } else {
                        dsdt[0] = -theta[0] * s[0] + rate;
                    }
                };
                try {
                    boost::numeric::odeint::integrate_adaptive(stepper, rhs, x, t_cur, tb,
                                                               std::min(0.1, (tb - t_cur) / 10.0));
                } catch (const std::exception& e) {
                    throw IntegrationError(std::string("ODE integration failed at theta ") + describe(theta) + ": " +
                                               e.what(),
                                           {theta.begin(), theta.end()});
                }
                for (double v : x)
                    if (!std::isfinite(v))
                        throw IntegrationError("ODE state diverged at theta " + describe(theta),
                                               {theta.begin(), theta.end()});
            }
            t_cur = tb;
        }
        for (const auto& d : merged)
            if (d.duration == 0.0 && d.time + lag == tb) x[0] += d.amount;
        while (next_out < times.size() && times[next_out] == tb) {
            out.predictions[next_out] = x[oral ? 1 : 0] / vd;
            ++next_out;
        }
    }
    return out;
}

ModelSpec::ModelSpec(ModelKind kind, const ParameterSpace& space, std::map<std::string, double> fixed)
    : kind_(kind), fixed_(std::move(fixed)), free_dim_(space.dim()) {
    const auto& canon = model_parameter_names(kind);
    source_.assign(canon.size(), -1);
    fixed_values_.assign(canon.size(), 0.0);
    for (const auto& [name, value] : fixed_) {
        if (std::find(canon.begin(), canon.end(), name) == canon.end())
            throw DomainError("fixed parameter '" + name + "' is not a parameter of " + to_string(kind));
        if (!std::isfinite(value)) throw DomainError("fixed parameter '" + name + "' must be finite");
    }
    for (std::size_t j = 0; j < space.dim(); ++j) {
        const auto& name = space.names()[j];
        auto it = std::find(canon.begin(), canon.end(), name);
        if (it == canon.end())
            throw DomainError("parameter '" + name + "' is not a parameter of " + to_string(kind));
        if (fixed_.count(name)) throw DomainError("parameter '" + name + "' is both free and fixed");
        const auto c = static_cast<std::size_t>(it - canon.begin());
        if (source_[c] != -1) throw DomainError("parameter '" + name + "' listed twice");
        source_[c] = static_cast<int>(j);
    }
    for (std::size_t c = 0; c < canon.size(); ++c) {
        if (source_[c] != -1) continue;
        auto it = fixed_.find(canon[c]);
        if (it == fixed_.end())
            throw DomainError("parameter '" + canon[c] + "' must be either free or fixed for " + to_string(kind));
        fixed_values_[c] = it->second;
    }
}

std::vector<double> ModelSpec::full_parameters(const SupportPoint& theta) const {
    if (theta.dim() != free_dim_) throw DomainError("support point dimension does not match the model");
    std::vector<double> p(source_.size());
    for (std::size_t c = 0; c < source_.size(); ++c)
        p[c] = source_[c] >= 0 ? theta[static_cast<std::size_t>(source_[c])] : fixed_values_[c];
    return p;
}

Trajectory ModelSpec::predict(const SupportPoint& theta, std::span<const DoseEvent> doses,
                              std::span<const double> times) const {
    const auto p = full_parameters(theta);
    return kind_ == ModelKind::one_comp_iv ? predict_one_comp_iv(p, doses, times)
                                           : predict_two_comp_oral_lag(p, doses, times);
}

}  // namespace npod

#include "catch_amalgamated.hpp"

#include "npod/errors.hpp"
#include "npod/models.hpp"

#include <cmath>
#include <random>

using namespace npod;
using Catch::Approx;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

bool agrees(double got, double want, double rel, double abs_tol) {
    return std::abs(got - want) <= std::max(rel * std::abs(want), abs_tol);
}

}  // namespace

TEST_CASE("one-compartment infusion reaches steady state", "[models]") {
    const std::vector<double> theta{0.1, 100.0};
    const std::vector<DoseEvent> doses{{0.0, 1000.0 * 1000.0, 1000.0, Route::infusion}};
    const std::vector<double> t{1000.0};
    const auto tr = predict_one_comp_iv(theta, doses, t);
    CHECK(rel_err(tr.predictions[0], 100.0) < 1e-6);
}

TEST_CASE("no doses give an all-zero trajectory", "[models]") {
    const std::vector<double> t{0.0, 1.0, 5.0};
    const std::vector<double> one{0.3, 20.0}, two{1.0, 0.2, 30.0, 0.5};
    for (double v : predict_one_comp_iv(one, {}, t).predictions) CHECK(v == 0.0);
    for (double v : predict_two_comp_oral_lag(two, {}, t).predictions) CHECK(v == 0.0);
    for (double v : integrate_ode(ModelKind::one_comp_iv, one, {}, t).predictions) CHECK(v == 0.0);
    for (double v : integrate_ode(ModelKind::two_comp_oral_lag, two, {}, t).predictions) CHECK(v == 0.0);
}

TEST_CASE("dataset-A regimen: closed form matches the ODE integrator and a scipy reference", "[models]") {
    const std::vector<double> theta{0.2, 50.0};
    const std::vector<DoseEvent> doses{{0.0, 500.0, 0.5, Route::infusion}};
    const std::vector<double> t{0.5, 1, 2, 4, 8};
    const auto cf = predict_one_comp_iv(theta, doses, t);
    const auto ode = integrate_ode(ModelKind::one_comp_iv, theta, doses, t);
    // scipy solve_ivp, DOP853, rtol 1e-13
    const std::vector<double> ref{9.516258196403248, 8.610666495797718, 7.049817464607269, 4.7256339674184185,
                                  2.1233642153772836};
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(rel_err(cf.predictions[i], ode.predictions[i]) < 1e-6);
        CHECK(rel_err(cf.predictions[i], ref[i]) < 1e-10);
    }
}

TEST_CASE("oral model with lag: zero before the lag", "[models]") {
    const std::vector<double> theta{1.3, 0.2, 40.0, 2.0};
    const std::vector<DoseEvent> doses{{0.0, 100.0, 0.0, Route::oral}};
    const std::vector<double> t{1.9};
    CHECK(predict_two_comp_oral_lag(theta, doses, t).predictions[0] == 0.0);
}

TEST_CASE("oral model: superposition of two doses", "[models]") {
    const std::vector<double> theta{0.9, 0.15, 60.0, 0.7};
    const std::vector<DoseEvent> both{{0.0, 300.0, 0.0, Route::oral}, {24.0, 300.0, 0.0, Route::oral}};
    const std::vector<DoseEvent> single{{0.0, 300.0, 0.0, Route::oral}};
    const std::vector<double> t30{30.0}, t6{6.0};
    const double sum = predict_two_comp_oral_lag(theta, single, t30).predictions[0] +
                       predict_two_comp_oral_lag(theta, single, t6).predictions[0];
    CHECK(std::abs(predict_two_comp_oral_lag(theta, both, t30).predictions[0] - sum) <= 1e-12 * sum);
}

TEST_CASE("oral model: closed form matches the ODE integrator and a scipy reference", "[models]") {
    const std::vector<double> theta{1.0, 0.1, 80.0, 0.5};
    const std::vector<DoseEvent> doses{{0.0, 600.0, 0.0, Route::oral}};
    const std::vector<double> t{1, 2, 6, 12};
    const auto cf = predict_two_comp_oral_lag(theta, doses, t);
    const auto ode = integrate_ode(ModelKind::two_comp_oral_lag, theta, doses, t);
    const std::vector<double> ref{2.872489706567603, 5.31314846897183, 4.773858657850183, 2.6385553273787865};
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(rel_err(cf.predictions[i], ode.predictions[i]) < 1e-6);
        CHECK(rel_err(cf.predictions[i], ref[i]) < 1e-10);
    }
}

TEST_CASE("oral model falls back to the equal-rate limit", "[models]") {
    const double ke = 0.3, vd = 20.0, dose = 100.0;
    const std::vector<double> theta{ke * (1 + 1e-10), ke, vd, 0.0};
    const std::vector<DoseEvent> doses{{0.0, dose, 0.0, Route::oral}};
    const std::vector<double> t{0.5, 2.0, 10.0};
    const auto tr = predict_two_comp_oral_lag(theta, doses, t);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double want = dose * ke * t[i] / vd * std::exp(-ke * t[i]);
        CHECK(rel_err(tr.predictions[i], want) < 1e-8);
    }
    // and the general form is continuous across the switch
    const std::vector<double> near{ke * (1 + 1e-6), ke, vd, 0.0};
    CHECK(rel_err(predict_two_comp_oral_lag(near, doses, t).predictions[1], tr.predictions[1]) < 1e-5);
}

TEST_CASE("integrate_ode: bolus decay", "[models]") {
    const std::vector<double> theta{0.5, 1.0};
    const std::vector<DoseEvent> doses{{0.0, 100.0, 0.0, Route::infusion}};
    const std::vector<double> t{2.0};
    CHECK(rel_err(integrate_ode(ModelKind::one_comp_iv, theta, doses, t).predictions[0], 100.0 * std::exp(-1.0)) <
          1e-6);
}

TEST_CASE("models reject non-positive parameters", "[models]") {
    const std::vector<DoseEvent> iv{{0.0, 1.0, 1.0, Route::infusion}};
    const std::vector<DoseEvent> po{{0.0, 1.0, 0.0, Route::oral}};
    const std::vector<double> t{1.0};
    CHECK_THROWS_AS(predict_one_comp_iv(std::vector<double>{0.0, 1.0}, iv, t), DomainError);
    CHECK_THROWS_AS(predict_one_comp_iv(std::vector<double>{1.0, -1.0}, iv, t), DomainError);
    CHECK_THROWS_AS(predict_two_comp_oral_lag(std::vector<double>{-1.0, 0.1, 1.0, 0.0}, po, t), DomainError);
    CHECK_THROWS_AS(predict_two_comp_oral_lag(std::vector<double>{1.0, 0.1, 1.0, -0.5}, po, t), DomainError);
}

TEST_CASE("closed form and ODE agree on random schedules", "[models][property]") {
    std::mt19937_64 rng(2024);
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    double worst_one = 0.0, worst_two = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::vector<double> one{u(0.02, 1.5), u(5.0, 200.0)};
        const std::vector<double> two{u(0.1, 4.0), u(0.02, 0.8), u(5.0, 150.0), u(0.0, 2.0)};
        std::vector<DoseEvent> iv, po;
        double t = 0.0;
        const int n = 1 + trial % 4;
        for (int d = 0; d < n; ++d) {
            iv.push_back({t, u(10, 1000), trial % 5 == 0 ? 0.0 : u(0.1, 3.0), Route::infusion});
            po.push_back({t, u(10, 1000), 0.0, Route::oral});
            t += u(2.0, 24.0);
        }
        std::vector<double> times;
        for (double s = 0.25; s < t + 24.0; s += u(0.3, 4.0)) times.push_back(s);

        const auto a1 = predict_one_comp_iv(one, iv, times);
        const auto b1 = integrate_ode(ModelKind::one_comp_iv, one, iv, times);
        const auto a2 = predict_two_comp_oral_lag(two, po, times);
        const auto b2 = integrate_ode(ModelKind::two_comp_oral_lag, two, po, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            CHECK(agrees(b1.predictions[i], a1.predictions[i], 1e-6, 1e-9));
            CHECK(agrees(b2.predictions[i], a2.predictions[i], 1e-6, 1e-9));
            if (a1.predictions[i] > 1e-9) worst_one = std::max(worst_one, rel_err(b1.predictions[i], a1.predictions[i]));
            if (a2.predictions[i] > 1e-9) worst_two = std::max(worst_two, rel_err(b2.predictions[i], a2.predictions[i]));
        }
    }
    INFO("worst relative error: one " << worst_one << ", two " << worst_two);
    CHECK(worst_one < 1e-6);
    CHECK(worst_two < 1e-6);
}

TEST_CASE("superposition over doses for both models", "[models][property]") {
    std::mt19937_64 rng(99);
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<double> one{u(0.02, 1.5), u(5.0, 200.0)};
        const std::vector<double> two{u(0.1, 4.0), u(0.02, 0.8), u(5.0, 150.0), u(0.0, 2.0)};
        std::vector<DoseEvent> iv, po;
        for (int d = 0; d < 3; ++d) {
            iv.push_back({d * 12.0 + u(0, 5), u(10, 500), u(0.1, 2.0), Route::infusion});
            po.push_back({d * 12.0 + u(0, 5), u(10, 500), 0.0, Route::oral});
        }
        const std::vector<double> times{1, 5, 13, 20, 30, 48};
        auto total = [&](auto fn, const std::vector<double>& th, const std::vector<DoseEvent>& ds) {
            std::vector<double> s(times.size(), 0.0);
            for (const auto& d : ds) {
                const std::vector<DoseEvent> one_dose{d};
                const auto tr = fn(th, one_dose, times);
                for (std::size_t i = 0; i < s.size(); ++i) s[i] += tr.predictions[i];
            }
            return s;
        };
        const auto s1 = total(predict_one_comp_iv, one, iv);
        const auto s2 = total(predict_two_comp_oral_lag, two, po);
        const auto m1 = predict_one_comp_iv(one, iv, times);
        const auto m2 = predict_two_comp_oral_lag(two, po, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            CHECK(std::abs(m1.predictions[i] - s1[i]) <= 1e-10 * std::abs(s1[i]) + 1e-300);
            CHECK(std::abs(m2.predictions[i] - s2[i]) <= 1e-10 * std::abs(s2[i]) + 1e-300);
        }
    }
}

TEST_CASE("one-compartment washout is strictly decreasing", "[models][property]") {
    std::mt19937_64 rng(5);
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<double> theta{u(0.05, 1.0), u(10, 100)};
        const std::vector<DoseEvent> doses{{0.0, u(50, 500), u(0.1, 2.0), Route::infusion},
                                           {6.0, u(50, 500), u(0.1, 2.0), Route::infusion}};
        std::vector<double> times;
        for (double t = 8.5; t < 40.0; t += 0.5) times.push_back(t);
        const auto tr = predict_one_comp_iv(theta, doses, times);
        for (std::size_t i = 1; i < times.size(); ++i) CHECK(tr.predictions[i] < tr.predictions[i - 1]);
    }
}

TEST_CASE("merge_doses sums coincident doses", "[models]") {
    const std::vector<DoseEvent> doses{{0.0, 100.0, 0.0, Route::oral},
                                       {0.0, 50.0, 0.0, Route::oral},
                                       {0.0, 10.0, 1.0, Route::infusion}};
    const auto m = merge_doses(doses);
    REQUIRE(m.size() == 2);
    double oral = 0.0;
    for (const auto& d : m)
        if (d.route == Route::oral) oral = d.amount;
    CHECK(oral == 150.0);
}

TEST_CASE("ModelSpec maps free and fixed parameters", "[models]") {
    const ParameterSpace ke_only({"Ke"}, {0.01}, {1.0});
    const ModelSpec spec(ModelKind::one_comp_iv, ke_only, {{"Vd", 50.0}});
    CHECK(spec.free_dim() == 1);
    const auto full = spec.full_parameters(SupportPoint{{0.2}});
    CHECK(full == std::vector<double>{0.2, 50.0});
    CHECK_THROWS_AS(ModelSpec(ModelKind::one_comp_iv, ke_only), DomainError);
    CHECK_THROWS_AS(ModelSpec(ModelKind::one_comp_iv, ke_only, {{"Q", 1.0}, {"Vd", 1.0}}), DomainError);
}

#include "catch_amalgamated.hpp"

#include "npod/errors.hpp"
#include "npod/sampling.hpp"

#include <chrono>
#include <cmath>

using namespace npod;
using Catch::Approx;

TEST_CASE("Sobol points match the reference tables", "[sampling]") {
    const SobolSequence s5(5);
    // scipy.stats.qmc.Sobol(d=5, scramble=False), first eight points
    const double ref[8][5] = {{0, 0, 0, 0, 0},
                              {.5, .5, .5, .5, .5},
                              {.75, .25, .25, .25, .75},
                              {.25, .75, .75, .75, .25},
                              {.375, .375, .625, .875, .375},
                              {.875, .875, .125, .375, .875},
                              {.625, .125, .875, .625, .625},
                              {.125, .625, .375, .125, .125}};
    for (int i = 0; i < 8; ++i) {
        const auto p = s5.point(static_cast<std::uint64_t>(i));
        for (int j = 0; j < 5; ++j) CHECK(p[static_cast<std::size_t>(j)] == ref[i][j]);
    }

    const SobolSequence s32(32);
    const std::vector<std::pair<std::uint64_t, std::vector<int>>> wide{
        {37, {944, 656, 592, 944, 784, 304, 176, 816, 624, 176, 16, 80, 592, 880, 112, 496,
              816, 432, 48,  144, 976, 80,  560, 656, 304, 368, 816, 400, 528, 112, 368, 144}},
        {777, {709, 959, 167, 281, 651, 365, 195, 781, 357, 331, 763, 713, 393, 485, 583, 527,
               413, 885, 379, 771, 243, 279, 969, 493, 353, 149, 61,  799, 65,  113, 555, 921}},
        {1023, {1,   771, 627, 149, 191, 449, 143, 633, 353, 871, 695, 37,  133, 681, 371, 475,
                321, 897, 599, 327, 887, 19,  813, 201, 245, 385, 521, 779, 861, 445, 951, 629}}};
    for (const auto& [idx, scaled] : wide) {
        const auto p = s32.point(idx);
        for (std::size_t j = 0; j < 32; ++j) CHECK(p[j] * 1024.0 == scaled[j]);
    }
}

TEST_CASE("sobol_points starts after the origin", "[sampling]") {
    const auto pts = sobol_points(2, 3);
    CHECK(pts[0] == std::vector<double>{0.5, 0.5});
    CHECK(pts[1] == std::vector<double>{0.75, 0.25});
}

TEST_CASE("Sobol outputs lie in [0,1) and are deterministic", "[sampling][property]") {
    for (auto seed : {std::optional<std::uint32_t>{}, std::optional<std::uint32_t>{12345u}}) {
        const auto a = sobol_points(7, 10000, seed);
        const auto b = sobol_points(7, 10000, seed);
        CHECK(a == b);
        for (const auto& p : a)
            for (double v : p) CHECK((v >= 0.0 && v < 1.0));
    }
    CHECK(sobol_points(3, 50, 1u) != sobol_points(3, 50, 2u));
    CHECK(sobol_points(3, 50, 1u) != sobol_points(3, 50));
}

TEST_CASE("Sobol 2-D elementary intervals hold exactly", "[sampling][property]") {
    for (auto seed : {std::optional<std::uint32_t>{}, std::optional<std::uint32_t>{99u}}) {
        const SobolSequence s(2, seed);
        int counts[4][4] = {};
        for (std::uint64_t i = 0; i < 1024; ++i) {
            const auto p = s.point(i);
            ++counts[static_cast<int>(p[0] * 4)][static_cast<int>(p[1] * 4)];
        }
        for (auto& row : counts)
            for (int c : row) CHECK(c == 64);
    }
}

TEST_CASE("Sobol rejects unsupported dimensions", "[sampling]") {
    CHECK_THROWS_AS(SobolSequence(0), DomainError);
    CHECK_THROWS_AS(SobolSequence(33), DomainError);
    CHECK_NOTHROW(SobolSequence(32));
}

TEST_CASE("init_grid maps the sequence into the box", "[sampling]") {
    const ParameterSpace line({"x"}, {0.0}, {10.0});
    const auto one = init_grid(line, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0][0] == 5.0);

    const auto space = dataset_a_space();
    const auto grid = init_grid(space, 5000, 4u);
    CHECK(grid.size() == 5000);
    for (const auto& p : grid) CHECK(space.contains(p));
}

TEST_CASE("init_grid is fast for the studied densities", "[sampling]") {
    const auto space = dataset_a_space();
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t total = 0;
    for (int x = 0; x <= 11; ++x) total += init_grid(space, 51u << x).size();
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    CHECK(total == 51u * 4095u);
    WARN("init_grid for K0 = 51..104448 took " << ms << " ms");
    CHECK(ms < 100.0);
}

TEST_CASE("CounterRng streams are independent and reproducible", "[sampling]") {
    CounterRng a(1, 0), b(1, 0), c(1, 1), d(2, 0);
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
    CounterRng e(3, 3);
    for (int i = 0; i < 1000; ++i) {
        const double u = e.uniform();
        CHECK((u >= 0.0 && u < 1.0));
    }
}

TEST_CASE("zero noise reproduces the model exactly", "[sampling]") {
    auto spec = dataset_a_simulation(8, 10);
    spec.error = ErrorModel{{0.0, 0.0, 0.0, 0.0}, NoiseMode::additive, 0.0};
    const auto sim = simulate_population(spec);
    for (std::size_t i = 0; i < sim.population.size(); ++i) {
        const auto& s = sim.population[i];
        const auto tr = spec.model.predict(sim.theta[i], s.doses(), s.observation_times());
        for (std::size_t j = 0; j < tr.predictions.size(); ++j)
            CHECK(s.observations()[j].value == tr.predictions[j]);
    }
}

TEST_CASE("simulation is deterministic and subject streams are stable", "[sampling]") {
    const auto a = simulate_population(dataset_a_simulation(17, 12));
    const auto b = simulate_population(dataset_a_simulation(17, 12));
    CHECK(a.population == b.population);
    CHECK(a.theta == b.theta);

    auto small_spec = dataset_a_simulation(17, 12);
    small_spec.fixed_subjects.clear();
    small_spec.n_subjects = 5;
    const auto small = simulate_population(small_spec);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(small.population[i] == a.population[i]);
        CHECK(small.theta[i] == a.theta[i]);
    }
    CHECK(a.component.back() == -1);
    CHECK(a.theta.back() == SupportPoint{{1.0, 200.0}});
}

TEST_CASE("mixture fractions are respected", "[sampling][property]") {
    const ParameterSpace space({"Ke"}, {0.001}, {5.0});
    const ModelSpec m(ModelKind::one_comp_iv, space, {{"Vd", 10.0}});
    SimulationSpec spec{m,
                        {{0.8, {0.1}, {0.0}}, {0.2, {1.0}, {0.0}}},
                        {},
                        {{0.0, 10.0, 0.0, Route::infusion}},
                        {1.0},
                        ErrorModel{{0.0, 0.0, 0.0, 0.0}, NoiseMode::additive, 0.0},
                        10000,
                        5,
                        space};
    const auto sim = simulate_population(spec);
    std::size_t first = 0;
    for (int c : sim.component) first += c == 0;
    CHECK(std::abs(static_cast<double>(first) / 10000.0 - 0.8) <= 0.01);
    for (std::size_t i = 0; i < sim.theta.size(); ++i) CHECK(sim.theta[i][0] == (sim.component[i] == 0 ? 0.1 : 1.0));
}

TEST_CASE("simulation noise is calibrated", "[sampling][property]") {
    auto spec = dataset_a_simulation(23, 10000);
    spec.fixed_subjects.clear();
    const auto sim = simulate_population(spec);
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < sim.population.size(); ++i) {
        const auto& s = sim.population[i];
        const auto tr = spec.model.predict(sim.theta[i], s.doses(), s.observation_times());
        for (std::size_t j = 0; j < tr.predictions.size(); ++j) {
            const double w = 0.05 * tr.predictions[j];
            const double z = (s.observations()[j].value - tr.predictions[j]) / w;
            sum += z;
            sum2 += z * z;
            ++n;
        }
    }
    REQUIRE(n == 100000);
    const double mean = sum / static_cast<double>(n);
    const double var = sum2 / static_cast<double>(n) - mean * mean;
    CHECK(std::abs(mean) <= 0.01);
    CHECK(std::abs(var - 1.0) <= 0.02);
}

TEST_CASE("simulation spec validation", "[sampling]") {
    auto spec = dataset_a_simulation(1, 3);
    spec.truth[0].fraction = 0.7;
    CHECK_THROWS_AS(simulate_population(spec), DomainError);
    spec = dataset_a_simulation(1, 3);
    spec.sample_times = {};
    CHECK_THROWS_AS(simulate_population(spec), DomainError);
}

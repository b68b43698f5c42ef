#include "npod/sampling.hpp"

#include "npod/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace npod {

namespace {

struct DirectionNumbers {
    unsigned degree;
    std::uint32_t a;
    std::array<std::uint32_t, 7> m;
};

// Joe & Kuo, new-joe-kuo-6.21201, dimensions 2..32.
constexpr std::array<DirectionNumbers, 31> kJoeKuo{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    {7, 7, {1, 1, 3, 13, 7, 35, 63}},
    {7, 8, {1, 3, 5, 9, 1, 25, 53}},
    {7, 14, {1, 3, 1, 13, 9, 35, 107}},
    {7, 19, {1, 3, 1, 5, 27, 61, 31}},
    {7, 21, {1, 1, 5, 11, 19, 41, 61}},
    {7, 28, {1, 3, 5, 3, 3, 13, 69}},
    {7, 31, {1, 1, 7, 13, 1, 19, 1}},
    {7, 32, {1, 3, 7, 5, 13, 19, 59}},
    {7, 37, {1, 1, 3, 9, 25, 29, 41}},
    {7, 41, {1, 3, 5, 13, 23, 1, 55}},
    {7, 42, {1, 3, 7, 3, 13, 59, 17}},
}};

std::uint32_t hash32(std::uint32_t x) {
    x ^= x >> 16;
    x *= 0x21f0aaadu;
    x ^= x >> 15;
    x *= 0x735a2d97u;
    x ^= x >> 15;
    return x;
}

// Laine-Karras style permutation: each output bit depends only on the same
// and lower input bits, which after bit reversal becomes a nested uniform
// scramble of the binary digits.
std::uint32_t laine_karras(std::uint32_t x, std::uint32_t seed) {
    x += seed;
    x ^= x * 0x6c50b47cu;
    x ^= x * 0xb82f1e52u;
    x ^= x * 0xc7afe638u;
    x ^= x * 0x8d22f6e6u;
    return x;
}

std::uint32_t reverse_bits(std::uint32_t x) {
    x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
    x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
    x = ((x >> 4) & 0x0f0f0f0fu) | ((x & 0x0f0f0f0fu) << 4);
    x = ((x >> 8) & 0x00ff00ffu) | ((x & 0x00ff00ffu) << 8);
    return (x >> 16) | (x << 16);
}

std::uint32_t nested_uniform_scramble(std::uint32_t x, std::uint32_t seed) {
    return reverse_bits(laine_karras(reverse_bits(x), seed));
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

SobolSequence::SobolSequence(std::size_t dim, std::optional<std::uint32_t> scramble_seed)
    : dim_(dim), seed_(scramble_seed), directions_(dim) {
    if (dim < 1 || dim > kMaxDimension)
        throw DomainError("Sobol dimension must be in [1, " + std::to_string(kMaxDimension) + "], got " +
                          std::to_string(dim));
    for (unsigned i = 0; i < 32; ++i) directions_[0][i] = 1u << (31 - i);
    for (std::size_t d = 1; d < dim; ++d) {
        const auto& dn = kJoeKuo[d - 1];
        auto& v = directions_[d];
        const unsigned s = dn.degree;
        for (unsigned i = 0; i < s; ++i) v[i] = dn.m[i] << (31 - i);
        for (unsigned i = s; i < 32; ++i) {
            v[i] = v[i - s] ^ (v[i - s] >> s);
            for (unsigned k = 1; k < s; ++k) v[i] ^= ((dn.a >> (s - 1 - k)) & 1u) * v[i - k];
        }
    }
}

std::vector<double> SobolSequence::point(std::uint64_t index) const {
    if (index >> 32) throw DomainError("Sobol index exceeds 2^32");
    const auto gray = static_cast<std::uint32_t>(index ^ (index >> 1));
    std::vector<double> x(dim_);
    for (std::size_t d = 0; d < dim_; ++d) {
        std::uint32_t bits = 0;
        for (std::uint32_t g = gray, b = 0; g != 0; g >>= 1, ++b)
            if (g & 1u) bits ^= directions_[d][b];
        if (seed_) bits = nested_uniform_scramble(bits, hash32(*seed_ ^ hash32(static_cast<std::uint32_t>(d) + 1u)));
        x[d] = static_cast<double>(bits) * 0x1p-32;
    }
    return x;
}

std::vector<std::vector<double>> sobol_points(std::size_t dim, std::size_t n,
                                              std::optional<std::uint32_t> scramble_seed) {
    if (n < 1) throw DomainError("sobol_points requires n >= 1");
    const SobolSequence seq(dim, scramble_seed);
    std::vector<std::vector<double>> out;
    out.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) out.push_back(seq.point(i));
    return out;
}

std::vector<SupportPoint> init_grid(const ParameterSpace& space, std::size_t count,
                                    std::optional<std::uint32_t> scramble_seed) {
    if (count < 1) throw DomainError("initial grid needs at least one point");
    std::vector<SupportPoint> grid;
    grid.reserve(count);
    for (const auto& u : sobol_points(space.dim(), count, scramble_seed)) grid.push_back(denormalize_point(u, space));
    return grid;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream + 0x9e3779b97f4a7c15ULL))) {}

std::uint64_t CounterRng::next_u64() {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
}

double CounterRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1p-53;
}

double CounterRng::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SimulationSpec::validate() const {
    if (n_subjects < 1 && fixed_subjects.empty()) throw DomainError("simulation needs at least one subject");
    if (n_subjects > 0 && truth.empty()) throw DomainError("simulation truth has no components");
    double total = 0.0;
    for (const auto& c : truth) {
        if (!(c.fraction >= 0.0)) throw DomainError("mixture fractions must be >= 0");
        if (c.mean.size() != model.free_dim() || c.sd.size() != model.free_dim())
            throw DomainError("mixture component dimension does not match the model");
        for (double s : c.sd)
            if (!(s >= 0.0)) throw DomainError("mixture sd must be >= 0");
        total += c.fraction;
    }
    if (!truth.empty() && std::abs(total - 1.0) > 1e-9) throw DomainError("mixture fractions must sum to 1");
    for (const auto& p : fixed_subjects)
        if (p.dim() != model.free_dim()) throw DomainError("fixed subject dimension does not match the model");
    if (sample_times.empty()) throw DomainError("simulation needs sample times");
    if (!std::is_sorted(sample_times.begin(), sample_times.end())) throw DomainError("sample times must be sorted");
    for (const auto& d : regimen) d.validate();
    error.validate();
}

SimulatedPopulation simulate_population(const SimulationSpec& spec) {
    spec.validate();
    std::vector<Subject> subjects;
    std::vector<SupportPoint> thetas;
    std::vector<int> components;
    const std::size_t total = spec.n_subjects + spec.fixed_subjects.size();
    auto regimen = spec.regimen;
    std::stable_sort(regimen.begin(), regimen.end(), [](const auto& a, const auto& b) { return a.time < b.time; });

    for (std::size_t s = 0; s < total; ++s) {
        CounterRng rng(spec.seed, s);
        SupportPoint theta;
        int comp = -1;
        if (s < spec.n_subjects) {
            const double u = rng.uniform();
            double cum = 0.0;
            comp = static_cast<int>(spec.truth.size()) - 1;
            for (std::size_t c = 0; c < spec.truth.size(); ++c) {
                cum += spec.truth[c].fraction;
                if (u < cum) {
                    comp = static_cast<int>(c);
                    break;
                }
            }
            const auto& mc = spec.truth[static_cast<std::size_t>(comp)];
            bool ok = false;
            for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
                theta.coords.resize(mc.mean.size());
                for (std::size_t j = 0; j < mc.mean.size(); ++j) theta.coords[j] = mc.mean[j] + mc.sd[j] * rng.normal();
                ok = std::all_of(theta.coords.begin(), theta.coords.end(), [](double v) { return v > 0.0; }) &&
                     (!spec.bounds || spec.bounds->contains(theta));
            }
            if (!ok) throw DomainError("could not draw a valid parameter vector from component " + std::to_string(comp));
        } else {
            theta = spec.fixed_subjects[s - spec.n_subjects];
        }

        const auto traj = spec.model.predict(theta, regimen, spec.sample_times);
        std::vector<ObservationEvent> obs;
        obs.reserve(traj.predictions.size());
        for (std::size_t j = 0; j < traj.predictions.size(); ++j) {
            const double y = traj.predictions[j];
            const auto& p = spec.error.poly;
            const double sigma = p[0] + y * (p[1] + y * (p[2] + y * p[3]));
            double w = spec.error.mode == NoiseMode::additive
                           ? std::sqrt(sigma * sigma + spec.error.noise * spec.error.noise)
                           : sigma * spec.error.noise;
            if (w < 0.0) throw NoiseModelError("negative simulation noise sd at prediction " + std::to_string(y));
            const double z = rng.normal();
            obs.push_back({spec.sample_times[j], w > 0.0 ? y + w * z : y, 0});
        }
        subjects.emplace_back(std::to_string(s + 1), regimen, std::move(obs));
        thetas.push_back(std::move(theta));
        components.push_back(comp);
    }
    return {Population(std::move(subjects)), std::move(thetas), std::move(components)};
}

ParameterSpace dataset_a_space() {
    return ParameterSpace({"Ke", "Vd"}, {0.001, 25.0}, {3.0, 250.0});
}

ErrorModel dataset_a_error() {
    return ErrorModel{{0.0, 0.05, 0.0, 0.0}, NoiseMode::additive, 0.0};
}

SimulationSpec dataset_a_simulation(std::uint64_t seed, std::size_t n_mixture_subjects) {
    const auto space = dataset_a_space();
    // Ke modes at 0.10 and 0.24, Vd ~ N(102, 15).
    std::vector<MixtureComponent> truth{
        {0.5, {0.10, 102.0}, {0.015, 15.0}},
        {0.5, {0.24, 102.0}, {0.030, 15.0}},
    };
    return SimulationSpec{
        ModelSpec(ModelKind::one_comp_iv, space),
        std::move(truth),
        {SupportPoint{{1.0, 200.0}}},
        {DoseEvent{0.0, 500.0, 0.5, Route::infusion}},
        {0.5, 1, 2, 3, 4, 6, 8, 12, 18, 24},
        dataset_a_error(),
        n_mixture_subjects,
        seed,
        space,
    };
}

}  // namespace npod

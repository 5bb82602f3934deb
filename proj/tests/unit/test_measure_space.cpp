#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sclab/error.hpp"
#include "sclab/measure_space.hpp"
#include "sclab/rng.hpp"

using namespace sclab;

namespace {

PhaseBox unit_box(int n) {
    PhaseBox b;
    b.n = n;
    b.x_lo = {-2.0, -2.0};
    b.x_hi = {2.0, 2.0};
    b.p_lo = {-1.5, -1.5};
    b.p_hi = {1.5, 1.5};
    return b;
}

ParticleEnsemble random_ensemble(Rng& rng, int size) {
    std::vector<Coord> xs, ps;
    for (int i = 0; i < size; ++i) {
        xs.push_back({rng.uniform(-2, 2), 0.0});
        ps.push_back({rng.uniform(-1.5, 1.5), 0.0});
    }
    return ParticleEnsemble::uniform(1, xs, ps);
}

}  // namespace

TEST_CASE("dictionary construction and recorded bounds") {
    for (int n : {1, 2}) {
        const auto dict = TestDictionary::build(unit_box(n), 64, 11);
        CHECK(dict.size() == 64);
        const auto v = dict.verify();
        CHECK(v.max_abs <= 1.0);
        CHECK(v.max_lipschitz_ratio <= 1.0);
        CHECK(v.max_lipschitz_ratio > 0.05);
    }
    const auto a = TestDictionary::build(unit_box(1), 64, 11), b = TestDictionary::build(unit_box(1), 64, 11);
    CHECK(a.describe() == b.describe());
    CHECK(a.describe() != TestDictionary::build(unit_box(1), 64, 12).describe());
}

TEST_CASE("metric axioms on ensembles") {
    const auto dict = TestDictionary::build(unit_box(1));
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const auto a = random_ensemble(rng, 7), b = random_ensemble(rng, 5), c = random_ensemble(rng, 9);
        CHECK(d_P(dict, a, a) == 0.0);
        CHECK(d_P(dict, a, b) == d_P(dict, b, a));
        CHECK(d_P(dict, a, c) <= d_P(dict, a, b) + d_P(dict, b, c) + 1e-15);
        CHECK(d_P(dict, a, b) <= 2.0);
    }
    // Lipschitz sum recomputed from the member parameters.
    double lsum = 0.0;
    for (std::size_t k = 0; k < dict.size(); ++k) {
        double l2 = 0.0;
        for (std::size_t d = 0; d < 2; ++d) {
            const double l = 1.0 / (dict.members[k].width[d] * std::exp(0.5)) + dict.members[k].frequency[d];
            l2 += l * l;
        }
        lsum += std::ldexp(1.0, -static_cast<int>(k + 1)) * std::sqrt(l2);
    }
    CHECK(dict.lipschitz_sum() == doctest::Approx(lsum).epsilon(1e-14));
    const auto d0 = ParticleEnsemble::dirac(1, {0.0, 0.0}, {0.0, 0.0});
    const auto dz = ParticleEnsemble::dirac(1, {0.006, 0.0}, {0.008, 0.0});
    CHECK(d_P(dict, d0, dz) <= lsum * 0.01);

    // Vanishing perturbations: monotone decrease to zero.
    const auto base = random_ensemble(rng, 12);
    double prev = 1e300;
    for (double s : {0.4, 0.2, 0.1, 0.05, 0.01}) {
        auto moved = base;
        for (auto& q : moved.particles) q.x[0] += s;
        const double d = d_P(dict, moved, base);
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 0.01);

    auto bad = base;
    bad.particles[0].weight += 0.1;
    CHECK_THROWS_AS(d_P(dict, bad, base), Error);
}

TEST_CASE("field integrals against quadrature and streaming") {
    const double eps = 0.05;
    const auto g = SpatialGrid::cube(1, 256, -4.0, 4.0);
    const Coord y{0.3, 0.0}, p{-0.2, 0.0};
    const auto psi = coherent_state(g, eps, y, p).psi;
    const auto dict = TestDictionary::build(unit_box(1), 16, 3);
    const auto h = husimi(psi);
    const auto field = dictionary_integrals(dict, h);
    const auto stream = dictionary_integrals_husimi(dict, psi);
    for (std::size_t k = 0; k < dict.size(); ++k) {
        CHECK(std::abs(field[k] - stream[k]) < 1e-12);
        // Oracle: Simpson in x and p of f_k times the closed-form Husimi density.
        const auto& m = dict.members[k];
        const double ref = oracle::simpson(
            [&](double x) {
                return m.factor(0, x) * oracle::simpson(
                    [&](double q) { return m.factor(1, q) * oracle::coherent_husimi((x - y[0]) * (x - y[0]), (q - p[0]) * (q - p[0]), eps, 1); },
                    p[0] - 2.0, p[0] + 2.0, 400);
            },
            y[0] - 2.0, y[0] + 2.0, 400);
        CHECK(std::abs(field[k] - ref) < 1e-6);
    }
    const auto dirac = ParticleEnsemble::dirac(1, y, p);
    CHECK(d_P(dict, h, dirac) < 0.05);
    CHECK(d_P(dict, h, h) == 0.0);
    auto heavy = h;
    for (auto& v : heavy.values) v *= 1.1;
    CHECK_THROWS_AS(d_P(dict, heavy, dirac), Error);
}

TEST_CASE("Monte-Carlo sampling rate of d_P") {
    const double eps = 0.1;
    const auto g = SpatialGrid::cube(1, 256, -4.0, 4.0);
    const Coord y{0.2, 0.0}, p{0.1, 0.0};
    const auto dict = TestDictionary::build(unit_box(1));
    const auto ref = dictionary_integrals_husimi(dict, coherent_state(g, eps, y, p).psi);
    std::vector<double> mean;
    for (int m : {100, 400, 1600}) {
        double s = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(m)));
            std::vector<Coord> xs, ps;
            for (int i = 0; i < m; ++i) {
                xs.push_back({y[0] + std::sqrt(eps) * rng.normal(), 0.0});
                ps.push_back({p[0] + std::sqrt(eps) * rng.normal(), 0.0});
            }
            s += d_P(dict, ref, dictionary_integrals(dict, ParticleEnsemble::uniform(1, xs, ps)));
        }
        mean.push_back(s / 20.0);
    }
    for (std::size_t i = 1; i < mean.size(); ++i) {
        const double ratio = mean[i - 1] / mean[i];
        CHECK(ratio > 1.5);
        CHECK(ratio < 2.7);
    }
}

TEST_CASE("expectation measure") {
    const auto a = ParticleEnsemble::dirac(1, {0.1, 0.0}, {0.0, 0.0});
    const auto b = ParticleEnsemble::dirac(1, {-0.4, 0.0}, {0.3, 0.0});
    const std::vector<ParticleEnsemble> two{a, b};
    const std::vector<double> half{0.5, 0.5};
    const auto e = expectation_measure(two, half);
    REQUIRE(e.size() == 2);
    CHECK(e.particles[0].weight == 0.5);
    CHECK(e.particles[1].x[0] == -0.4);
    CHECK_NOTHROW(e.validate());

    Rng rng(8);
    const auto mu = random_ensemble(rng, 6);
    const std::vector<ParticleEnsemble> one{mu};
    const std::vector<double> unit{1.0};
    const auto same = expectation_measure(one, unit);
    for (std::size_t i = 0; i < mu.size(); ++i) CHECK(same.particles[i].weight == mu.particles[i].weight);
}

TEST_CASE("regularity check") {
    const int per = 100;
    std::vector<Coord> xs, ps;
    for (int i = 0; i < per; ++i) {
        xs.push_back({(i + 0.5) / per, 0.0});
        ps.push_back({0.0, 0.0});
    }
    const auto mu = ParticleEnsemble::uniform(1, xs, ps);
    const auto rep = regularity_check(mu, 1.0, 4.0 / per);
    CHECK(std::abs(rep.max_density - 1.0) < 0.1);
    CHECK(rep.regular);

    for (auto& x : xs) x[0] *= 2.0;
    const auto wide = regularity_check(ParticleEnsemble::uniform(1, xs, ps), 1.0, 8.0 / per);
    CHECK(std::abs(wide.max_density / rep.max_density - 0.5) < 1e-9);

    // 2D: 40 x 40 lattice on the unit square, and its double-size copy.
    std::vector<Coord> x2, p2, x2w;
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j) {
            x2.push_back({(i + 0.5) / 40, (j + 0.5) / 40});
            x2w.push_back({2.0 * (i + 0.5) / 40, 2.0 * (j + 0.5) / 40});
            p2.push_back({0.0, 0.0});
        }
    const auto r2 = regularity_check(ParticleEnsemble::uniform(2, x2, p2), 1.0, 0.1);
    const auto r2w = regularity_check(ParticleEnsemble::uniform(2, x2w, p2), 1.0, 0.2);
    CHECK(std::abs(r2.max_density - 1.0) < 0.1);
    CHECK(std::abs(r2w.max_density / r2.max_density - 0.25) < 1e-9);

    const auto dirac = ParticleEnsemble::dirac(1, {0.0, 0.0}, {0.0, 0.0});
    double prev = 0.0;
    for (double h : {0.1, 0.01, 0.001}) {
        const auto r = regularity_check(dirac, 10.0, h);
        CHECK(r.max_density > prev);
        prev = r.max_density;
    }
    CHECK(!regularity_check(dirac, 10.0, 0.001).regular);
}

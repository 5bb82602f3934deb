#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "sclab/classical_flow.hpp"
#include "sclab/error.hpp"
#include "sclab/rng.hpp"

using namespace sclab;

namespace {

Potential harmonic(int n, double omega = 1.0) {
    BoundedPart b;
    b.kind = BoundedKind::Harmonic;
    b.omega = omega;
    return Potential(n, b);
}

Potential cosine() {
    BoundedPart b;
    b.kind = BoundedKind::Cosine;
    return Potential(1, b);
}

PhasePoint end_point(const Potential& pot, const Coord& x, const Coord& p, double T, double h) {
    FlowConfig cfg;
    cfg.h = h;
    return flow_map(x, p, pot, T, 2, cfg).points.back();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("free motion is exact") {
    const Potential pot(2, BoundedPart{});
    const auto tr = flow_map({0.1, -0.3}, {0.7, 0.2}, pot, 2.5, 11, FlowConfig{});
    REQUIRE(tr.times.size() == 11);
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
        CHECK(std::abs(tr.points[s].x[0] - (0.1 + 0.7 * tr.times[s])) < 1e-12);
        CHECK(std::abs(tr.points[s].x[1] - (-0.3 + 0.2 * tr.times[s])) < 1e-12);
        CHECK(tr.points[s].p[0] == 0.7);
    }
    CHECK(tr.times.back() == 2.5);
}

TEST_CASE("harmonic oscillator against the closed form") {
    const auto pot = harmonic(1);
    const double T = std::numbers::pi / 3.0, x0 = 0.8, p0 = -0.3;
    const auto z = end_point(pot, {x0, 0.0}, {p0, 0.0}, T, 1e-4);
    CHECK(std::abs(z.x[0] - (x0 * std::cos(T) + p0 * std::sin(T))) < 1e-8);
    CHECK(std::abs(z.p[0] - (p0 * std::cos(T) - x0 * std::sin(T))) < 1e-8);

    // Circle rotation in 2D with omega = 2: radius preserved, angle advances by omega t.
    const auto pot2 = harmonic(2, 2.0);
    FlowConfig cfg;
    cfg.h = 1e-4;
    const auto tr = flow_map({1.0, 0.0}, {0.0, 2.0}, pot2, 1.0, 5, cfg);
    for (std::size_t s = 0; s < tr.times.size(); ++s) {
        const auto& q = tr.points[s];
        CHECK(std::abs(std::hypot(q.x[0], q.x[1]) - 1.0) < 1e-8);
        CHECK(std::abs(q.x[0] - std::cos(2.0 * tr.times[s])) < 1e-7);
    }
}

TEST_CASE("cosine energy drift and second-order convergence") {
    const auto pot = cosine();
    const EnergyFunction energy(pot);
    FlowConfig cfg;
    const auto tr = flow_map({0.3, 0.0}, {1.1, 0.0}, pot, 10.0, 101, cfg);
    const double e0 = energy(tr.points[0].x, tr.points[0].p);
    double drift = 0.0;
    for (const auto& q : tr.points) drift = std::max(drift, std::abs(energy(q.x, q.p) - e0));
    CHECK(drift <= 1e-6);

    const double T = 2.0;
    const auto a = end_point(pot, {0.3, 0.0}, {1.1, 0.0}, T, 0.02);
    const auto b = end_point(pot, {0.3, 0.0}, {1.1, 0.0}, T, 0.01);
    const auto c = end_point(pot, {0.3, 0.0}, {1.1, 0.0}, T, 0.005);
    const double ratio = std::abs(a.x[0] - b.x[0]) / std::abs(b.x[0] - c.x[0]);
    CHECK(ratio > 3.8);
    CHECK(ratio < 4.2);
}

TEST_CASE("flow map preserves phase-space area") {
    const auto pot = cosine();
    const double d = 1e-5, T = 3.0;
    const Coord x{0.4, 0.0}, p{0.9, 0.0};
    const auto xp = end_point(pot, {x[0] + d, 0.0}, p, T, 1e-3), xm = end_point(pot, {x[0] - d, 0.0}, p, T, 1e-3);
    const auto pp = end_point(pot, x, {p[0] + d, 0.0}, T, 1e-3), pm = end_point(pot, x, {p[0] - d, 0.0}, T, 1e-3);
    const double a = (xp.x[0] - xm.x[0]) / (2 * d), b = (pp.x[0] - pm.x[0]) / (2 * d);
    const double c = (xp.p[0] - xm.p[0]) / (2 * d), e = (pp.p[0] - pm.p[0]) / (2 * d);
    CHECK(std::abs(a * e - b * c - 1.0) < 1e-6);
}

TEST_CASE("ensembles and push-forward") {
    CHECK_THROWS_AS(ParticleEnsemble{}.validate(), Error);
    Rng rng(5);
    std::vector<Coord> xs, ps;
    for (int i = 0; i < 40; ++i) {
        xs.push_back({0.4 * rng.normal(), 0.0});
        ps.push_back({0.4 * rng.normal(), 0.0});
    }
    const auto mu = ParticleEnsemble::uniform(1, xs, ps);
    CHECK_NOTHROW(mu.validate());
    const auto nu = ParticleEnsemble::dirac(1, {0.2, 0.0}, {-0.1, 0.0});
    const auto m = mix(mu, nu, 0.3);
    CHECK_NOTHROW(m.validate());

    const auto pot = cosine();
    FlowConfig cfg;
    cfg.h = 2e-3;
    const double T = 2.0;
    const auto pm = push_forward(m, pot, T, 201, cfg);
    const auto pa = push_forward(mu, pot, T, 201, cfg);
    const auto pb = push_forward(nu, pot, T, 201, cfg);
    CHECK(pm.states.size() == 201);
    CHECK(pm.absorbed_mass.back() == 0.0);

    TestFunction phi;
    phi.x_factor = {{0.1, 0.0}, {0.8, 1.0}};
    phi.p_factor = {{0.0, 0.0}, {0.9, 1.0}};
    const TimeWindow win{T};
    // Exact (up to time quadrature and step error) weak solution.
    const double r = liouville_residual(pm, pot, phi, win);
    CHECK(r < 1e-5);

    // Linearity of the pairings in mu: signed per-sample sums.
    for (std::size_t s : {0u, 77u, 200u}) {
        double full = 0.0, parts = 0.0;
        for (const auto& q : pm.states[s].particles) full += q.weight * phi(q.x, q.p);
        for (const auto& q : pa.states[s].particles) parts += 0.3 * q.weight * phi(q.x, q.p);
        for (const auto& q : pb.states[s].particles) parts += 0.7 * q.weight * phi(q.x, q.p);
        CHECK(std::abs(full - parts) < 1e-12);
    }
    TestFunction zero = phi;
    zero.coefficient = 0.0;
    CHECK(liouville_residual(pm, pot, zero, win) == 0.0);
}

TEST_CASE("absorption, integrability and the support guard") {
    const Potential pot(2, BoundedPart{}, {1.0, 1.0});
    FlowConfig cfg;
    cfg.r_guard = 1e-3;
    const auto near = flow_map({0.1, 0.1005}, {0.0, 0.0}, pot, 1.0, 3, cfg);
    CHECK(near.absorbed);
    CHECK(near.absorbed_at == 0.0);

    // Repulsive pair: approach stops at Z1 Z2 / E from the diagonal, no absorption.
    std::vector<Coord> xs{{-0.5, 0.5}, {-0.4, 0.6}, {0.5, -0.3}}, ps{{0.5, -0.5}, {0.3, -0.2}, {-0.4, 0.4}};
    const auto mu = ParticleEnsemble::uniform(2, xs, ps);
    const auto path = push_forward(mu, pot, 2.0, 401, cfg);
    CHECK(path.absorbed_mass.back() == 0.0);
    const std::vector<double> deltas{1e-1, 1e-2, 1e-3, 1e-4};
    const auto rep = dist_integrability(path, pot, 10.0, 2.0, deltas);
    CHECK(std::isfinite(rep.value));
    CHECK(rep.value > 0.0);
    for (std::size_t k = 1; k < deltas.size(); ++k) CHECK(rep.regularized[k] >= rep.regularized[k - 1]);
    CHECK(rep.regularized.back() <= rep.value);
    CHECK(std::abs(rep.regularized.back() - rep.value) < 1e-2 * rep.value);
    // Energy is conserved through the near-collision.
    const EnergyFunction energy(pot);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto& a = path.states.front().particles[i];
        const auto& b = path.states.back().particles[i];
        CHECK(std::abs(energy(a.x, a.p) - energy(b.x, b.p)) < 1e-5);
    }

    TestFunction phi;
    phi.n = 2;
    phi.x_factor = {{0.0, 0.0}, {0.5, 0.5}};
    CHECK_THROWS_AS(liouville_residual(path, pot, phi, TimeWindow{2.0}), Error);
}

TEST_CASE("ensemble CSV output is deterministic") {
    const auto pot = harmonic(2);
    std::vector<Coord> xs{{0.1, 0.2}, {-0.3, 0.4}}, ps{{0.0, 1.0}, {0.5, 0.0}};
    const auto path = push_forward(ParticleEnsemble::uniform(2, xs, ps), pot, 1.0, 3, FlowConfig{});
    const auto dir = std::filesystem::temp_directory_path() / "sclab_flow_csv";
    std::filesystem::remove_all(dir);
    write_measure_path(dir / "a", path);
    write_measure_path(dir / "b", path);
    CHECK(slurp(dir / "a" / "index.csv") == slurp(dir / "b" / "index.csv"));
    const auto first = slurp(dir / "a" / "ensemble_00002.csv");
    CHECK(first == slurp(dir / "b" / "ensemble_00002.csv"));
    CHECK(first.rfind("id,x1,x2,p1,p2,weight,flag\n", 0) == 0);
    std::filesystem::remove_all(dir);
}

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "sclab/error.hpp"
#include "sclab/rng.hpp"
#include "sclab/spectral.hpp"

using namespace sclab;

namespace {

Wavefunction random_field(const SpatialGrid& g, double eps, std::uint64_t seed) {
    Rng rng(seed);
    Wavefunction psi(g, eps);
    for (auto& v : psi.values) v = {rng.normal(), rng.normal()};
    return psi;
}

double max_diff(const Wavefunction& a, const Wavefunction& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(SpatialGrid::cube(1, 8, 0.0, 1.0), Error);
    CHECK_THROWS_AS(SpatialGrid::cube(1, 48, 0.0, 1.0), Error);
    CHECK_THROWS_AS(SpatialGrid::cube(3, 16, 0.0, 1.0), Error);
    CHECK_THROWS_AS(SpatialGrid::cube(1, 16, 1.0, 1.0), Error);
    const auto g = SpatialGrid::cube(2, 16, -1.0, 1.0);
    CHECK(g.size() == 256);
    CHECK(g.point(0)[0] == doctest::Approx(-1.0 + 1.0 / 16.0));
    // Cell centring keeps nodes off x = 0.
    for (std::size_t j = 0; j < g.size(); ++j) CHECK(g.point(j)[0] != 0.0);
    const auto ma = momentum_axis(g.axis(0), 0.1);
    CHECK(ma.node(8) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(ma.node(9) == doctest::Approx(2.0 * oracle::pi * 0.1 / 2.0));
}

TEST_CASE("normalize") {
    const auto g = SpatialGrid::cube(1, 64, 0.0, 1.0);
    Wavefunction c(g, 0.1);
    for (auto& v : c.values) v = 2.0;
    const auto n1 = normalize(c);
    for (const auto& v : n1.values) CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-15);

    const auto r = normalize(random_field(g, 0.1, 7));
    CHECK(std::abs(r.norm() - 1.0) < 1e-12);
    CHECK(max_diff(normalize(r), r) < 1e-14);

    Wavefunction rot = r;
    const cplx ph = std::polar(1.0, 0.7);
    for (auto& v : rot.values) v *= 3.0 * ph;
    Wavefunction expect = r;
    for (auto& v : expect.values) v *= ph;
    CHECK(max_diff(normalize(rot), expect) < 1e-14);

    Wavefunction z(g, 0.1);
    CHECK_THROWS_AS(normalize(z), Error);
    try {
        normalize(z);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroNorm);
    }
}

TEST_CASE("eps_fourier against direct quadrature of the Fourier integral") {
    const double eps = 0.1;
    const auto g = SpatialGrid::cube(1, 256, -6.0, 6.0);
    Wavefunction psi(g, eps);
    for (std::size_t j = 0; j < g.size(); ++j) psi.values[j] = std::exp(-g.point(j)[0] * g.point(j)[0] / (2.0 * eps));
    psi = normalize(psi);
    const auto f = eps_fourier(psi);
    const double amp = std::pow(oracle::pi * eps, -0.25);
    // Closed form at p = 0: int (pi eps)^{-1/4} exp(-x^2/(2 eps)) dx.
    CHECK(std::abs(f.values[128] - cplx(amp * std::sqrt(2.0 * oracle::pi * eps), 0.0)) < 1e-10);
    for (std::size_t k : {120u, 126u, 128u, 131u, 140u}) {
        const double p = f.axes[0].node(k);
        const auto ref = oracle::simpson_c(
            [&](double x) { return amp * std::exp(-x * x / (2.0 * eps)) * std::polar(1.0, -p * x / eps); }, -6.0, 6.0, 20000);
        CHECK(std::abs(f.values[k] - ref) < 1e-9);
        CHECK(std::abs(eps_fourier_at(psi, {p, 0.0}) - ref) < 1e-9);
    }

    // Modulation by exp(i p0 x / eps) translates the transform by p0 (one grid step multiple).
    const double p0 = f.axes[0].spacing() * 5.0;
    Wavefunction mod = psi;
    for (std::size_t j = 0; j < g.size(); ++j) mod.values[j] *= std::polar(1.0, p0 * g.point(j)[0] / eps);
    const auto fm = eps_fourier(mod);
    for (std::size_t k = 20; k < 230; ++k) CHECK(std::abs(fm.values[k + 5] - f.values[k]) < 1e-12);
}

TEST_CASE("Parseval and inversion") {
    for (int n : {1, 2}) {
        const auto g = SpatialGrid::cube(n, n == 1 ? 128 : 32, -3.0, 5.0);
        const double eps = 0.07;
        const auto psi = random_field(g, eps, 3);
        const auto f = eps_fourier(psi);
        double s = 0.0;
        for (const auto& v : f.values) s += std::norm(v);
        s *= f.cell_volume() * std::pow(2.0 * oracle::pi * eps, -n);
        CHECK(std::abs(s - psi.norm_squared()) < 1e-10 * psi.norm_squared());
        CHECK(max_diff(inverse_eps_fourier(f, g), psi) < 1e-12);
    }
}

TEST_CASE("coherent states") {
    const double eps = 0.04;
    const auto g = SpatialGrid::cube(1, 512, -4.0, 4.0);
    const auto cs = coherent_state(g, eps, {0.3, 0.0}, {0.5, 0.0});
    CHECK(std::abs(cs.raw_norm - 5.0) < 1e-8);
    CHECK(std::abs(cs.psi.norm() - 1.0) < 1e-12);
    CHECK(std::abs(inner_product(cs.psi, cs.psi) - cplx(1.0, 0.0)) < 1e-12);

    const auto c0 = coherent_state(g, eps, {0.0, 0.0}, {0.0, 0.0});
    for (const auto& v : c0.psi.values) {
        CHECK(std::abs(v.imag()) < 1e-14);
        CHECK(v.real() >= 0.0);
    }
    CHECK_THROWS_AS(coherent_state(g, eps, {3.9, 0.0}, {0.0, 0.0}), Error);

    // Overlap law; oracle is a Simpson quadrature of the analytic states.
    const double e2 = 0.1;
    const auto g2 = SpatialGrid::cube(1, 512, -6.0, 6.0);
    const double y1 = -0.4, p1 = 0.3, y2 = 0.2, p2 = -0.1;
    const auto a = coherent_state(g2, e2, {y1, 0.0}, {p1, 0.0}).psi;
    const auto b = coherent_state(g2, e2, {y2, 0.0}, {p2, 0.0}).psi;
    const double closed = std::exp(-((y1 - y2) * (y1 - y2) + (p1 - p2) * (p1 - p2)) / (4.0 * e2));
    const auto quad = oracle::simpson_c(
        [&](double x) { return std::conj(oracle::coherent_1d(x, e2, y1, p1)) * oracle::coherent_1d(x, e2, y2, p2); }, -6.0, 6.0, 20000);
    CHECK(std::abs(std::abs(quad) - closed) < 1e-8);
    CHECK(std::abs(std::abs(inner_product(a, b)) - closed) < 1e-8);

    const auto g3 = SpatialGrid::cube(2, 64, -3.0, 3.0);
    const auto c2 = coherent_state(g3, 0.1, {0.2, -0.3}, {0.4, 0.1});
    CHECK(std::abs(c2.raw_norm - 1.0 / 0.1) < 1e-8);
}

TEST_CASE("wave packets") {
    const auto g = SpatialGrid::cube(1, 2048, -4.0, 4.0);
    const double eps = 0.1;
    const Envelope env{EnvelopeKind::Bump, 4.0};
    const auto wp = wave_packet(g, eps, 0.5, {0.0, 0.0}, {1.0, 0.0}, env);
    CHECK(std::abs(wp.psi.norm() - 1.0) < 1e-12);
    // Oracle: fraction of int |phi0|^2 inside |u| <= 3.
    const auto prof = [&](double u) { return std::pow(env.profile_1d(u), 2); };
    const double frac = oracle::simpson(prof, -3.0, 3.0, 6000) / oracle::simpson(prof, -4.0, 4.0, 8000);
    double inside = 0.0;
    const double r = 3.0 * std::sqrt(eps);
    for (std::size_t j = 0; j < g.size(); ++j)
        if (std::abs(g.point(j)[0]) <= r) inside += std::norm(wp.psi.values[j]);
    inside *= g.cell_volume();
    CHECK(frac >= 0.99);
    CHECK(inside >= 0.99);
    CHECK(std::abs(inside - frac) < 1e-3);
    CHECK_THROWS_AS(wave_packet(g, eps, 0.5, {3.0, 0.0}, {0.0, 0.0}, env), Error);
    const auto gp = wave_packet(g, 0.05, 1.0, {0.5, 0.0}, {0.0, 0.0}, Envelope{EnvelopeKind::Gaussian, 1.0});
    CHECK(std::abs(gp.psi.norm() - 1.0) < 1e-12);
}

TEST_CASE("binary dump round trip") {
    const auto g = SpatialGrid::cube(2, 16, -1.0, 2.0);
    const auto psi = random_field(g, 0.3, 9);
    const auto path = std::filesystem::temp_directory_path() / "sclab_dump_test.bin";
    write_dump(path, psi);
    const auto back = read_dump(path);
    CHECK(back.grid == g);
    CHECK(back.eps == 0.3);
    CHECK(max_diff(back, psi) == 0.0);
    CHECK(std::filesystem::file_size(path) == 4 + 4 + 4 + 2 * (4 + 16) + 8 + 256 * 16);
    std::filesystem::remove(path);
}

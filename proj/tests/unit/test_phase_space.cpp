#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "sclab/error.hpp"
#include "sclab/phase_space.hpp"
#include "sclab/propagator.hpp"
#include "sclab/rng.hpp"

using namespace sclab;

namespace {

constexpr double kEps = 0.05;


SpatialGrid line() { return SpatialGrid::cube(1, 256, -4.0, 4.0); }

// Even superposition of two coherent states.
Wavefunction cat(const SpatialGrid& g, double eps, double a, double p) {
    Wavefunction psi(g, eps);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.point(j)[0];
        psi.values[j] = oracle::coherent_1d(x, eps, -a, p) + oracle::coherent_1d(x, eps, a, -p);
    }
    return normalize(psi);
}

// Direct Riemann-free reference: Simpson quadrature of the defining y-integral.
double wigner_oracle(double x, double p, double eps, double y0, double p0) {
    const auto f = [&](double s) {
        return (oracle::coherent_1d(x + s, eps, y0, p0) * std::conj(oracle::coherent_1d(x - s, eps, y0, p0)) *
                std::polar(1.0, -2.0 * p * s / eps)).real();
    };
    return oracle::simpson(f, -3.0, 3.0, 12000) / (oracle::pi * eps);
}

TestFunction random_phi(Rng& rng, int n) {
    TestFunction t;
    t.n = n;
    t.coefficient = rng.uniform(-2.0, 2.0);
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        t.x_factor.centre[k] = rng.uniform(-1.0, 1.0);
        t.x_factor.radius[k] = rng.uniform(0.2, 1.5);
        t.p_factor.centre[k] = rng.uniform(-1.0, 1.0);
        t.p_factor.radius[k] = rng.uniform(0.2, 1.5);
    }
    return t;
}

}  // namespace

TEST_CASE("Wigner function of a coherent state") {
    const auto g = line();
    const double y0 = 0.3, p0 = 0.5;
    const auto psi = coherent_state(g, kEps, {y0, 0.0}, {p0, 0.0}).psi;
    const auto w = wigner(psi);
    CHECK(w.imag_residue < 1e-12);
    const double peak = 1.0 / (oracle::pi * kEps);
    double err = 0.0;
    for (std::size_t i = 0; i < w.x_size(); ++i)
        for (std::size_t q = 0; q < w.p_size(); ++q) {
            const Coord x = w.x_node(i), p = w.p_node(q);
            err = std::max(err, std::abs(w.at(i, q) - oracle::coherent_wigner((x[0] - y0) * (x[0] - y0), (p[0] - p0) * (p[0] - p0), kEps, 1)));
        }
    CHECK(err <= 1e-6 * peak);
    for (const Coord pt : {Coord{0.3, 0.5}, Coord{0.1, 0.6}, Coord{0.45, 0.3}}) {
        const std::size_t i = nearest_x_index(w, {pt[0], 0.0}), q = nearest_p_index(w, {pt[1], 0.0});
        CHECK(std::abs(w.at(i, q) - wigner_oracle(w.x_node(i)[0], w.p_node(q)[0], kEps, y0, p0)) <= 1e-6 * peak);
    }
    CHECK(w.total() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Wigner marginals and parity") {
    const auto g = line();
    const auto psi = cat(g, kEps, 0.8, 0.4);
    const auto w = wigner(psi);
    const auto xm = x_marginal(w);
    const auto rho = position_density(psi);
    double ex = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < xm.size(); ++i) {
        ex = std::max(ex, std::abs(xm[i] - rho[i]));
        mx = std::max(mx, rho[i]);
    }
    CHECK(ex <= 1e-8 * mx);
    const auto pm = p_marginal(w);
    const auto mom = momentum_density(psi, w.p_axes);
    double ep = 0.0, mp = 0.0;
    for (std::size_t q = 0; q < pm.size(); ++q) {
        ep = std::max(ep, std::abs(pm[q] - mom[q]));
        mp = std::max(mp, mom[q]);
    }
    CHECK(ep <= 1e-6 * mp);

    // Real wavefunction: W(x, p) = W(x, -p).
    const auto real = cat(g, kEps, 0.8, 0.0);
    const auto wr = wigner(real);
    const std::size_t P = wr.p_size();
    double asym = 0.0;
    for (std::size_t i = 0; i < wr.x_size(); ++i)
        for (std::size_t q = 1; q < P; ++q) asym = std::max(asym, std::abs(wr.at(i, q) - wr.at(i, P - q)));
    CHECK(asym <= 1e-10 / kEps);
    // Interference fringes make the Wigner field negative somewhere.
    CHECK(wr.min_value() < -0.1 / kEps);
}

TEST_CASE("Wigner guards") {
    const auto g = line();
    Wavefunction edge(g, kEps);
    for (std::size_t j = 0; j < g.size(); ++j) edge.values[j] = std::exp(-std::pow(g.point(j)[0] - 3.9, 2) / 0.2);
    try {
        wigner(normalize(edge));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TailOverflow);
    }
    // Centred but moving at 0.6 of the Nyquist momentum: beyond the half band.
    const double pn = nyquist_momentum(g, kEps);
    const auto fast = coherent_state(g, kEps, {0.0, 0.0}, {0.6 * pn, 0.0}).psi;
    try {
        wigner(fast);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NyquistViolation);
    }
    WignerOptions off;
    off.check = false;
    CHECK_NOTHROW(wigner(fast, off));
}

TEST_CASE("two-dimensional Wigner and Husimi of a coherent state") {
    const double eps = 0.1;
    const auto g = SpatialGrid::staggered(2, 64, -3.0, 3.0);
    const Coord y{0.3, -0.2}, p{0.2, 0.4};
    const auto psi = coherent_state(g, eps, y, p).psi;
    const auto w = wigner(psi);
    double err = 0.0;
    for (std::size_t i = 0; i < w.x_size(); i += 7)
        for (std::size_t q = 0; q < w.p_size(); ++q) {
            const Coord x = w.x_node(i), k = w.p_node(q);
            const double dx2 = std::pow(x[0] - y[0], 2) + std::pow(x[1] - y[1], 2);
            const double dp2 = std::pow(k[0] - p[0], 2) + std::pow(k[1] - p[1], 2);
            err = std::max(err, std::abs(w.at(i, q) - oracle::coherent_wigner(dx2, dp2, eps, 2)));
        }
    CHECK(err <= 1e-6 * std::pow(oracle::pi * eps, -2));
    const auto h = husimi(psi);
    double eh = 0.0;
    for (std::size_t i = 0; i < h.x_size(); ++i)
        for (std::size_t q = 0; q < h.p_size(); ++q) {
            const Coord x = h.x_node(i), k = h.p_node(q);
            const double dx2 = std::pow(x[0] - y[0], 2) + std::pow(x[1] - y[1], 2);
            const double dp2 = std::pow(k[0] - p[0], 2) + std::pow(k[1] - p[1], 2);
            eh = std::max(eh, std::abs(h.at(i, q) - oracle::coherent_husimi(dx2, dp2, eps, 2)));
        }
    CHECK(eh <= 1e-10 * std::pow(2.0 * oracle::pi * eps, -2));
    CHECK(h.min_value() >= 0.0);
}

TEST_CASE("Husimi function of a coherent state") {
    const auto g = line();
    const double y0 = -0.2, p0 = 0.7;
    const auto psi = coherent_state(g, kEps, {y0, 0.0}, {p0, 0.0}).psi;
    const auto layout = husimi_layout(g, kEps);
    CHECK(layout.stride * g.axis(0).spacing() <= 0.35 * std::sqrt(kEps));
    CHECK(static_cast<double>(layout.window) * g.axis(0).spacing() >= 2.0 * 8.6 * std::sqrt(kEps));
    const auto h = husimi(psi);
    const double peak = 1.0 / (2.0 * oracle::pi * kEps);
    double err = 0.0;
    for (std::size_t i = 0; i < h.x_size(); ++i)
        for (std::size_t q = 0; q < h.p_size(); ++q) {
            const double dx = h.x_node(i)[0] - y0, dp = h.p_node(q)[0] - p0;
            err = std::max(err, std::abs(h.at(i, q) - oracle::coherent_husimi(dx * dx, dp * dp, kEps, 1)));
        }
    CHECK(err <= 1e-10 * peak);
    CHECK(h.min_value() >= 0.0);
    CHECK(h.total() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(husimi_at(psi, {0.1, 0.0}, {0.5, 0.0}) == doctest::Approx(oracle::coherent_husimi(0.09, 0.04, kEps, 1)).epsilon(1e-10));
}

TEST_CASE("Husimi overlaps agree with the Gaussian-smoothed Wigner field") {
    const auto g = line();
    const auto psi = cat(g, kEps, 0.7, 0.3);
    HusimiOptions full;
    full.stride = 1;
    full.window = g.axis(0).count;
    const auto h = husimi(psi, full);
    const auto hw = husimi_from_wigner(wigner(psi));
    const std::size_t N = g.axis(0).count;
    double err = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < h.x_size(); ++i)
        for (std::size_t q = N / 4; q < 3 * N / 4; ++q) {
            const std::size_t c = 2 * q - N / 2;
            CHECK(h.p_node(q)[0] == doctest::Approx(hw.p_node(c)[0]));
            err = std::max(err, std::abs(h.at(i, q) - hw.at(i, c)));
            peak = std::max(peak, h.at(i, q));
        }
    CHECK(err <= 1e-6 * peak);

    // Marginals of the Husimi field are Gaussian-smoothed densities.
    const auto hd = husimi(psi);
    const auto sx = smoothed_position_density(psi, hd.x_axes);
    const auto xm = x_marginal(hd);
    double ex = 0.0;
    for (std::size_t i = 0; i < sx.size(); ++i) ex = std::max(ex, std::abs(sx[i] - xm[i]));
    CHECK(ex <= 1e-8);
    const auto sp = smoothed_momentum_density(psi, hd.p_axes);
    const auto pm = p_marginal(hd);
    double ep = 0.0;
    for (std::size_t q = 0; q < sp.size(); ++q) ep = std::max(ep, std::abs(sp[q] - pm[q]));
    CHECK(ep <= 1e-6);
}

TEST_CASE("pairings obey the A-norm bound") {
    Rng rng(17);
    const auto g = line();
    for (int trial = 0; trial < 100; ++trial) {
        const double y = rng.uniform(-1.5, 1.5), p = rng.uniform(-1.0, 1.0);
        const auto psi = trial % 2 ? cat(g, kEps, std::abs(y) + 0.2, p) : coherent_state(g, kEps, {y, 0.0}, {p, 0.0}).psi;
        const auto phi = random_phi(rng, 1);
        PairingResult r;
        CHECK_NOTHROW(r = pair(psi, phi));
        CHECK(std::abs(r.value) <= r.bound);
    }
    // Coherent state: the pairing factorises into Gaussian averages of phi1 and phi2.
    const double y0 = 0.2, p0 = -0.3;
    const auto psi = coherent_state(g, kEps, {y0, 0.0}, {p0, 0.0}).psi;
    TestFunction phi;
    phi.coefficient = 1.7;
    phi.x_factor = {{0.1, 0.0}, {0.6, 1.0}};
    phi.p_factor = {{-0.1, 0.0}, {0.8, 1.0}};
    const auto avg = [&](const BumpFactor& f, double c) {
        return oracle::simpson([&](double z) { return f({z, 0.0}, 1) * std::exp(-(z - c) * (z - c) / kEps); }, -2.0, 2.0, 8000) /
               std::sqrt(oracle::pi * kEps);
    };
    CHECK(pair(psi, phi).value == doctest::Approx(1.7 * avg(phi.x_factor, y0) * avg(phi.p_factor, p0)).epsilon(1e-6));

    // Wigner and Husimi pairings differ by at most the smoothing defect.
    const auto cs = cat(g, kEps, 0.6, 0.2);
    const auto w = wigner(cs);
    const auto h = husimi(cs);
    for (int trial = 0; trial < 10; ++trial) {
        const auto f = random_phi(rng, 1);
        const double a = integrate_separable(w, [&](const Coord& x) { return f.phi1(x); }, [&](const Coord& q) { return f.phi2(q); });
        const double b = integrate_separable(h, [&](const Coord& x) { return f.phi1(x); }, [&](const Coord& q) { return f.phi2(q); });
        CHECK(std::abs(a - b) <= a_norm_smoothing_defect(f, kEps) / (2.0 * oracle::pi));
    }
}

TEST_CASE("momentum second moment") {
    const auto g = line();
    const double p0 = 0.6;
    const auto psi = coherent_state(g, kEps, {0.1, 0.0}, {p0, 0.0}).psi;
    const auto m = momentum_second_moment(psi);
    CHECK(m.wigner_side == doctest::Approx(p0 * p0 + 0.5 * kEps).epsilon(1e-8));
    CHECK(m.gradient_side == doctest::Approx(p0 * p0 + 0.5 * kEps).epsilon(1e-8));
}

TEST_CASE("Husimi PDE residual") {
    const auto g = line();
    const auto psi0 = coherent_state(g, kEps, {0.5, 0.0}, {0.2, 0.0}).psi;
    TestFunction phi;
    phi.x_factor = {{0.3, 0.0}, {1.5, 1.0}};
    phi.p_factor = {{0.0, 0.0}, {1.5, 1.0}};
    const TimeWindow win{1.0};
    HusimiOptions fine;
    fine.stride = 1;
    auto run = [&](double omega, double dt) {
        BoundedPart b;
        b.kind = BoundedKind::Harmonic;
        b.omega = omega;
        const Potential pot(1, b);
        PropagatorConfig cfg;
        cfg.dt = dt;
        const auto traj = propagate(psi0, pot, 1.0, 81, cfg, true);
        return husimi_pde_residual(traj.times, traj.states, pot, phi, win, fine);
    };
    // omega = 1: the Husimi transform is transported exactly by the rotation.
    const auto exact = run(1.0, 1e-3);
    CHECK(std::abs(exact.derivative_term) > 5e-3);
    CHECK(exact.residual <= 1e-5 * std::abs(exact.derivative_term));
    // omega = 2: the residual is an O(eps) smoothing correction and does not vanish.
    const auto bent = run(2.0, 1e-3);
    CHECK(bent.residual > 1000.0 * exact.residual);
    CHECK(bent.residual == doctest::Approx(run(2.0, 5e-4).residual).epsilon(1e-2));

    // Supports touching the tube around the singular set are rejected.
    const auto g2 = SpatialGrid::staggered(2, 64, -4.0, 4.0);
    const Potential coul(2, BoundedPart{}, {1.0, 1.0});
    TestFunction near;
    near.n = 2;
    near.x_factor = {{0.0, 0.2}, {0.3, 0.3}};
    const auto p2 = coherent_state(g2, kEps, {-0.8, 0.8}, {0.0, 0.0}).psi;
    const std::vector<double> t{0.0, 0.5, 1.0};
    const std::vector<Wavefunction> path{p2, p2, p2};
    try {
        husimi_pde_residual(t, path, coul, near, win);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SupportViolation);
    }
}

TEST_CASE("phase-space dump and CSV slices") {
    const auto g = line();
    const auto h = husimi(cat(g, kEps, 0.5, 0.1));
    const auto dir = std::filesystem::temp_directory_path();
    write_dump(dir / "sclab_ps.bin", h);
    const auto back = read_phase_space_dump(dir / "sclab_ps.bin");
    CHECK(back.kind == FieldKind::Husimi);
    CHECK(back.x_axes == h.x_axes);
    CHECK(back.p_axes == h.p_axes);
    CHECK(back.eps == h.eps);
    CHECK(back.values == h.values);
    // A wavefunction dump is not a phase-space dump.
    write_dump(dir / "sclab_wf.bin", cat(g, kEps, 0.5, 0.1));
    CHECK_THROWS_AS(read_phase_space_dump(dir / "sclab_wf.bin"), Error);

    write_x_slice_csv(dir / "sclab_a.csv", h, 10);
    write_x_slice_csv(dir / "sclab_b.csv", h, 10);
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream is(p);
        return std::string(std::istreambuf_iterator<char>(is), {});
    };
    const auto text = slurp(dir / "sclab_a.csv");
    CHECK(text == slurp(dir / "sclab_b.csv"));
    CHECK(text.rfind("p,value\n", 0) == 0);
    write_p_slice_csv(dir / "sclab_c.csv", h, 3);
    CHECK(slurp(dir / "sclab_c.csv").rfind("x,value\n", 0) == 0);
    for (const char* f : {"sclab_ps.bin", "sclab_wf.bin", "sclab_a.csv", "sclab_b.csv", "sclab_c.csv"}) std::filesystem::remove(dir / f);
}

#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "sclab/potential.hpp"
#include "sclab/test_function.hpp"

using namespace sclab;

namespace {

// b_hat by Simpson on [-1, 1]; the integrand is even.
double bhat_oracle(double xi) {
    return 2.0 * oracle::simpson([&](double u) { return bump(u) * std::cos(xi * u); }, 0.0, 1.0, 2000);
}

TestFunction make(int n, double c, Coord xc, Coord xr, Coord pc, Coord pr) {
    TestFunction t;
    t.n = n;
    t.coefficient = c;
    t.x_factor = {xc, xr};
    t.p_factor = {pc, pr};
    return t;
}

}  // namespace

TEST_CASE("bump profile") {
    CHECK(bump(0.0) == 1.0);
    CHECK(bump(1.0) == 0.0);
    CHECK(bump(-1.5) == 0.0);
    CHECK(bump(0.5) == doctest::Approx(std::exp(1.0 - 1.0 / 0.75)));
    for (double u : {-0.9, -0.3, 0.2, 0.7}) {
        const double fd = (bump(u + 1e-6) - bump(u - 1e-6)) / 2e-6;
        CHECK(bump_derivative(u) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("bump transform against Simpson quadrature") {
    for (double xi : {0.0, 0.5, 3.0, 11.0, 40.0}) CHECK(std::abs(bump_transform(xi) - bhat_oracle(xi)) < 1e-10);
    // Separable factor transform with shift and scaling.
    const BumpFactor f{{0.3, -0.2}, {0.7, 1.2}};
    for (double y : {-2.0, 0.4, 5.0}) {
        const auto ref = oracle::simpson_c(
            [&](double z) { return bump((z - 0.3) / 0.7) * std::polar(1.0, -z * y); }, -0.4, 1.0, 4000);
        CHECK(std::abs(f.fourier({y, 0.0}, 1) - ref) < 1e-10);
    }
}

TEST_CASE("A-norm against an independent L1 quadrature of the transform") {
    // Oracle: 2 int_0^600 |b_hat| on a fine Simpson lattice, b_hat by a cosine sum.
    std::vector<double> b(2001);
    for (int j = 0; j <= 2000; ++j) b[static_cast<std::size_t>(j)] = bump(j / 2000.0);
    auto bh = [&](double xi) {
        double s = 0.5 * (b[0] + b[2000] * std::cos(xi));
        for (int j = 1; j < 2000; ++j) s += b[static_cast<std::size_t>(j)] * std::cos(xi * j / 2000.0);
        return 2.0 * s / 2000.0;
    };
    const double l1 = 2.0 * oracle::simpson([&](double xi) { return std::abs(bh(xi)); }, 0.0, 600.0, 60000);
    const double m1 = 2.0 * oracle::simpson([&](double xi) { return xi * std::abs(bh(xi)); }, 0.0, 600.0, 60000);

    const auto phi = make(1, 1.0, {0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0});
    CHECK(a_norm(phi) == doctest::Approx(l1).epsilon(1e-6));
    // Radius and centre of the p-factor do not change int |F phi2|.
    CHECK(a_norm(make(1, 1.0, {0.0, 0.0}, {1.0, 1.0}, {0.5, 0.0}, {0.3, 1.0})) == doctest::Approx(l1).epsilon(1e-6));
    CHECK(a_norm(phi.scaled(-2.5)) == doctest::Approx(2.5 * a_norm(phi)));
    // Fourier inversion gives sup |phi| <= (2 pi)^{-n} ||phi||_A.
    CHECK(phi.sup_abs() <= a_norm(phi) / (2.0 * oracle::pi));

    const auto phi2 = make(2, 1.0, {0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0});
    CHECK(a_norm(phi2) == doctest::Approx(l1 * l1).epsilon(1e-6));
    CHECK(transform_weighted_integral(phi2.p_factor, 2, [](double) { return 1.0; }) == doctest::Approx(l1 * l1).epsilon(1e-5));

    const auto narrow = make(1, 2.0, {0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {0.5, 1.0});
    CHECK(first_moment_norm(narrow) == doctest::Approx(2.0 * m1 / 0.5).epsilon(1e-5));
}

TEST_CASE("gradients and support geometry") {
    const auto phi = make(2, 1.5, {1.0, -1.0}, {0.5, 0.5}, {0.2, 0.1}, {1.0, 2.0});
    const Coord x{1.1, -0.8}, p{0.5, -0.3};
    const auto gx = phi.grad_x(x, p), gp = phi.grad_p(x, p);
    for (int d = 0; d < 2; ++d) {
        const auto k = static_cast<std::size_t>(d);
        Coord a = x, b = x, c = p, e = p;
        a[k] += 1e-6;
        b[k] -= 1e-6;
        c[k] += 1e-6;
        e[k] -= 1e-6;
        CHECK(gx[k] == doctest::Approx((phi(a, p) - phi(b, p)) / 2e-6).epsilon(1e-6));
        CHECK(gp[k] == doctest::Approx((phi(x, c) - phi(x, e)) / 2e-6).epsilon(1e-6));
    }
    const Potential pot(2, BoundedPart{}, {1.0, 1.0});
    CHECK(phi.x_support_distance_to_singular_set(pot) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(phi.x_support_inside(SpatialGrid::cube(2, 16, -2.0, 2.0)));
    CHECK(!phi.x_support_inside(SpatialGrid::cube(2, 16, -1.2, 1.2)));
}

TEST_CASE("Gaussian smoothing of the factors") {
    const BumpFactor f{{0.2, 0.0}, {0.8, 1.0}};
    const double eps = 0.05;
    for (double z : {-0.9, 0.0, 0.3, 1.1}) {
        const double ref = oracle::simpson(
            [&](double t) { return bump((t - 0.2) / 0.8) * std::exp(-(z - t) * (z - t) / eps) / std::sqrt(oracle::pi * eps); },
            -0.6, 1.0, 8000);
        CHECK(f.smoothed({z, 0.0}, 1, eps) == doctest::Approx(ref).epsilon(1e-9));
    }
}

TEST_CASE("smoothing defect norm") {
    const auto phi = make(1, 1.0, {0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0});
    const double eps = 0.05;
    const double d = a_norm_smoothing_defect(phi, eps);
    // Lower bound from Fourier inversion at the origin: |(phi - phi*G)(0, 0)| (2 pi)^n <= d.
    auto smooth0 = [&]() {
        return oracle::simpson([&](double t) { return bump(t) * std::exp(-t * t / eps) / std::sqrt(oracle::pi * eps); }, -1.0, 1.0, 8000);
    };
    const double s = smooth0();
    const double gap = std::abs(1.0 - s * s);
    CHECK(d >= 2.0 * oracle::pi * gap);
    CHECK(d <= 2.0 * a_norm(phi));
    // Shrinks with eps.
    CHECK(a_norm_smoothing_defect(phi, 0.01) < d);
    CHECK(a_norm_smoothing_defect(phi.scaled(3.0), eps) == doctest::Approx(3.0 * d));
}

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sclab/error.hpp"
#include "sclab/potential.hpp"
#include "sclab/rng.hpp"

using namespace sclab;

namespace {

Potential coulomb_pair(double z1 = 1.0, double z2 = 1.0) { return Potential(2, BoundedPart{}, {z1, z2}); }

Coord central_difference(const Potential& pot, const Coord& x, double h) {
    Coord g{0.0, 0.0};
    for (int d = 0; d < pot.dim(); ++d) {
        Coord a = x, b = x;
        a[static_cast<std::size_t>(d)] += h;
        b[static_cast<std::size_t>(d)] -= h;
        g[static_cast<std::size_t>(d)] = (pot.value(a) - pot.value(b)) / (2.0 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("Coulomb pair value and gradient") {
    const auto pot = coulomb_pair();
    const Coord x{0.3, -0.2};
    CHECK(pot.value(x) == doctest::Approx(2.0).epsilon(1e-15));
    const auto g = pot.gradient(x);
    const auto fd = central_difference(pot, x, 1e-6);
    CHECK(g[0] == doctest::Approx(-4.0).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(std::abs(fd[0] - g[0]) < 1e-5 * std::abs(g[0]));
    CHECK(std::abs(fd[1] - g[1]) < 1e-5 * std::abs(g[1]));
    CHECK_THROWS_AS(pot.value({0.4, 0.4}), Error);
    try {
        pot.gradient({0.4, 0.4});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OnSingularSet);
    }
    // Softening removes the singularity.
    CHECK(pot.with_softening(0.2).value({0.4, 0.4}) == doctest::Approx(5.0));
}

TEST_CASE("cosine gradient and bounds") {
    BoundedPart b;
    b.kind = BoundedKind::Cosine;
    const Potential pot(1, b);
    for (int i = 0; i < 10; ++i) {
        const double x = -3.0 + 0.61 * i;
        CHECK(pot.gradient({x, 0.0})[0] == doctest::Approx(-std::sin(x)).epsilon(1e-14));
    }
    CHECK(!pot.singular_enabled());
    CHECK(b.sup_bound(1) == 1.0);
    CHECK(b.lipschitz_bound(1) == 1.0);
}

TEST_CASE("gradients match finite differences away from S") {
    Rng rng(21);
    for (auto kind : {BoundedKind::Cosine, BoundedKind::Harmonic, BoundedKind::SplineWell, BoundedKind::Linear}) {
        BoundedPart b;
        b.kind = kind;
        b.amplitude = 0.7;
        b.wavenumber = 1.3;
        b.slope = {0.4, -0.9};
        b.width = 1.5;
        const Potential pot(2, b, {1.0, 2.0});
        int checked = 0;
        while (checked < 40) {
            const Coord x{rng.uniform(-2, 2), rng.uniform(-2, 2)};
            if (pot.dist_to_singular_set(x) < 0.1) continue;
            const auto g = pot.gradient(x);
            const auto fd = central_difference(pot, x, 1e-6);
            for (int d = 0; d < 2; ++d) {
                const double gd = g[static_cast<std::size_t>(d)], fdd = fd[static_cast<std::size_t>(d)];
                CHECK(std::abs(gd - fdd) <= 1e-5 * std::max(1.0, std::abs(gd)));
            }
            ++checked;
        }
    }
}

TEST_CASE("bounded-part bounds hold on samples") {
    Rng rng(4);
    for (auto kind : {BoundedKind::Zero, BoundedKind::Cosine, BoundedKind::SplineWell}) {
        BoundedPart b;
        b.kind = kind;
        b.amplitude = 1.4;
        b.wavenumber = 2.0;
        b.depth = 0.8;
        b.width = 0.7;
        for (int n : {1, 2}) {
            const double sup = b.sup_bound(n), lip = b.lipschitz_bound(n);
            for (int i = 0; i < 500; ++i) {
                const Coord x{rng.uniform(-3, 3), n == 2 ? rng.uniform(-3, 3) : 0.0};
                const Coord y{rng.uniform(-3, 3), n == 2 ? rng.uniform(-3, 3) : 0.0};
                CHECK(std::abs(b.value(x, n)) <= sup + 1e-15);
                CHECK(std::abs(b.value(x, n) - b.value(y, n)) <= lip * std::hypot(x[0] - y[0], x[1] - y[1]) + 1e-14);
            }
        }
    }
    BoundedPart h;
    h.kind = BoundedKind::Harmonic;
    CHECK(h.smooth_unbounded());
    CHECK(std::isinf(h.sup_bound(1)));
    BoundedPart s;
    s.kind = BoundedKind::SplineWell;
    CHECK(!s.is_c2());
    CHECK(s.gradient_bv());
}

TEST_CASE("distance to the singular set") {
    const auto pot = coulomb_pair();
    CHECK(pot.dist_to_singular_set({0.3, -0.2}) == doctest::Approx(0.5 / std::numbers::sqrt2));
    CHECK(pot.dist_to_singular_set({0.7, 0.7}) == 0.0);
    CHECK(pot.dist_to_singular_set({0.3, -0.2}) == pot.dist_to_singular_set({-0.2, 0.3}));
    CHECK(std::isinf(Potential(1, BoundedPart{}).dist_to_singular_set({0.1, 0.0})));
}

TEST_CASE("Coulomb lower bound check") {
    const auto pot = coulomb_pair(1.0, 3.0);
    const auto box = SpatialGrid::cube(2, 16, -2.0, 2.0);
    const auto pts = halton_points(pot, box, 1000, 0.01);
    CHECK(pts.size() == 1000);
    const auto rep = coulomb_lower_bound_check(pot, pts);
    CHECK(!rep.vacuous);
    CHECK(rep.checked == 1000);
    CHECK(rep.violations == 0);
    // Single pair: U_s = Z1Z2/|x1-x2| = (Z1Z2/sqrt 2)/dist exactly, so the margin is roundoff.
    CHECK(std::abs(rep.worst_margin) < 1e-12);
    CHECK(rep.worst_margin >= -1e-12);

    const auto none = coulomb_lower_bound_check(Potential(2, BoundedPart{}), pts);
    CHECK(none.vacuous);
    CHECK(none.checked == 0);
}

TEST_CASE("constructor validation and constants") {
    CHECK_THROWS_AS(Potential(1, BoundedPart{}, {1.0}), Error);
    CHECK_THROWS_AS(Potential(2, BoundedPart{}, {1.0, -1.0}), Error);
    CHECK_THROWS_AS(Potential(2, BoundedPart{}, {1.0}), Error);
    const auto pot = coulomb_pair(2.0, 1.5);
    CHECK(pot.min_charge_product() == 3.0);
    CHECK(pot.coulomb_error_constant() == doctest::Approx(std::numbers::sqrt2 / 3.0 / std::pow(2.0 * std::numbers::pi, 2)));
    CHECK(pot.with_scaled_charges(4.0).min_charge_product() == 12.0);
    CHECK(bounded_kind_from_string("spline_well") == BoundedKind::SplineWell);
    CHECK_THROWS_AS(bounded_kind_from_string("morse"), Error);
}

TEST_CASE("energy function and grid distance") {
    BoundedPart b;
    b.kind = BoundedKind::Harmonic;
    const Potential pot(2, b, {1.0, 1.0});
    const EnergyFunction e(pot);
    CHECK(e({0.5, -0.5}, {1.0, 2.0}) == doctest::Approx(2.5 + 0.25 + 1.0));
    // Identical cell-centred axes put nodes on the diagonal; an offset second axis does not.
    const auto same = SpatialGrid::cube(2, 32, -3.0, 3.0);
    CHECK(grid_distance_to_singular_set(pot, same) == 0.0);
    const double dx = 6.0 / 32.0;
    const auto shifted = SpatialGrid::staggered(2, 32, -3.0, 3.0);
    CHECK(grid_distance_to_singular_set(pot, shifted) == doctest::Approx(0.5 * dx / std::numbers::sqrt2));
}

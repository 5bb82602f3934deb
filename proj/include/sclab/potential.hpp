#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sclab/grid.hpp"

namespace sclab {

// Catalogue of bounded (or smooth, flagged unbounded) potential parts U_b.
enum class BoundedKind {
    Zero,
    Harmonic,    // (omega^2/2) |x|^2, smooth but unbounded
    Cosine,      // amplitude * sum_d cos(wavenumber * x_d)
    SplineWell,  // -depth * (1 - (x_d/width)^2)^2 inside |x_d| < width, summed over axes; C^1 not C^2
    Linear,      // <slope, x>, unbounded
};

BoundedKind bounded_kind_from_string(const std::string& name);
std::string to_string(BoundedKind kind);

struct BoundedPart {
    BoundedKind kind = BoundedKind::Zero;
    double omega = 1.0;
    double amplitude = 1.0;
    double wavenumber = 1.0;
    double depth = 1.0;
    double width = 1.0;
    Coord slope{0.0, 0.0};

    double value(const Coord& x, int n) const;
    Coord gradient(const Coord& x, int n) const;

    // sup |U_b| and Lip(U_b) over R^n; infinity for the unbounded members.
    double sup_bound(int n) const;
    double lipschitz_bound(int n) const;
    // Harmonic and Linear are smooth but unbounded; excluded from bound assertions.
    bool smooth_unbounded() const { return kind == BoundedKind::Harmonic || kind == BoundedKind::Linear; }
    // Catalogue attribute: gradient in BV_loc (true for every member).
    bool gradient_bv() const { return true; }
    // Second derivative continuous everywhere.
    bool is_c2() const { return kind != BoundedKind::SplineWell; }
};

// Pair (i, j) of 1-D particles with charge product Z_i Z_j > 0.
struct CoulombPair {
    int i = 0;
    int j = 1;
    double charge_product = 1.0;
};

// U = U_b + U_s on R^n, with U_s = sum_pairs Z_i Z_j / |x_i - x_j| when n >= 2
// (coordinates are read as n one-dimensional particles). softening > 0 replaces
// |x_i - x_j| by sqrt(|x_i - x_j|^2 + softening^2).
class Potential {
public:
    Potential() = default;
    Potential(int n, BoundedPart bounded);
    // Coulomb pairs built from charges Z (one per particle, all > 0).
    Potential(int n, BoundedPart bounded, std::vector<double> charges, double softening = 0.0);

    int dim() const { return n_; }
    const BoundedPart& bounded() const { return bounded_; }
    const std::vector<CoulombPair>& pairs() const { return pairs_; }
    const std::vector<double>& charges() const { return charges_; }
    bool singular_enabled() const { return !pairs_.empty(); }
    double softening() const { return softening_; }

    // Copies with one part switched off.
    Potential bounded_only() const;
    Potential singular_only() const;
    Potential with_softening(double delta) const;
    Potential with_scaled_charges(double factor) const;

    // Throw OnSingularSet when dist_to_S(x) < 1e-12 (unsoftened singular part).
    double value(const Coord& x) const;
    Coord gradient(const Coord& x) const;
    double singular_value(const Coord& x) const;
    Coord singular_gradient(const Coord& x) const;

    // Euclidean distance to S = union of {x_i = x_j}: min |x_i - x_j| / sqrt(2).
    // +infinity when there is no singular part.
    double dist_to_singular_set(const Coord& x) const;

    // Smallest charge product, and the constant c with U_s >= c / dist(x, S)
    // (c = min Z_i Z_j / sqrt(2) for the Euclidean hyperplane distance).
    double min_charge_product() const;
    double lower_bound_constant() const;

    // Constant C* in |int I_eps(U_s) phi| <= C* int |y| sup|F_p phi| dy int U_s^2 |psi|^2:
    // (2 pi)^{-n} sqrt(2) sum_pairs 1 / (Z_i Z_j).
    double coulomb_error_constant() const;

    std::string describe() const;

private:
    void check_off_singular(const Coord& x) const;

    int n_ = 1;
    BoundedPart bounded_;
    std::vector<double> charges_;
    std::vector<CoulombPair> pairs_;
    double softening_ = 0.0;
};

// U_s(x) >= c / dist(x, S) checked at sample points.
struct LowerBoundReport {
    bool vacuous = false;        // no singular part
    std::size_t checked = 0;     // points evaluated
    std::size_t violations = 0;  // margin < -1e-12 * U_s
    double worst_margin = std::numeric_limits<double>::infinity();
};

LowerBoundReport coulomb_lower_bound_check(const Potential& pot, std::span<const Coord> points);

// Halton points in a box, skipping those within `tube` of S.
std::vector<Coord> halton_points(const Potential& pot, const SpatialGrid& box, std::size_t count, double tube);

// E(x, p) = |p|^2 / 2 + U(x).
class EnergyFunction {
public:
    explicit EnergyFunction(const Potential& pot) : pot_(&pot) {}
    double operator()(const Coord& x, const Coord& p) const;

private:
    const Potential* pot_;
};

// Smallest distance from any grid node to S; +infinity without a singular part.
double grid_distance_to_singular_set(const Potential& pot, const SpatialGrid& grid);

}  // namespace sclab

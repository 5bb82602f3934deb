#include "sclab/potential.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sclab/error.hpp"
#include "sclab/rng.hpp"

namespace sclab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BoundedKind bounded_kind_from_string(const std::string& name) {
    if (name == "zero") return BoundedKind::Zero;
    if (name == "harmonic") return BoundedKind::Harmonic;
    if (name == "cosine") return BoundedKind::Cosine;
    if (name == "spline_well") return BoundedKind::SplineWell;
    if (name == "linear") return BoundedKind::Linear;
    throw Error(ErrorKind::Config, "unknown bounded potential '" + name + "'");
}

std::string to_string(BoundedKind kind) {
    switch (kind) {
        case BoundedKind::Zero: return "zero";
        case BoundedKind::Harmonic: return "harmonic";
        case BoundedKind::Cosine: return "cosine";
        case BoundedKind::SplineWell: return "spline_well";
        case BoundedKind::Linear: return "linear";
    }
    return "unknown";
}

double BoundedPart::value(const Coord& x, int n) const {
    double v = 0.0;
    for (int d = 0; d < n; ++d) {
        const double xd = x[static_cast<std::size_t>(d)];
        switch (kind) {
            case BoundedKind::Zero: break;
            case BoundedKind::Harmonic: v += 0.5 * omega * omega * xd * xd; break;
            case BoundedKind::Cosine: v += amplitude * std::cos(wavenumber * xd); break;
            case BoundedKind::SplineWell: {
                const double s = xd / width;
                if (std::abs(s) < 1.0) v -= depth * (1.0 - s * s) * (1.0 - s * s);
                break;
            }
            case BoundedKind::Linear: v += slope[static_cast<std::size_t>(d)] * xd; break;
        }
    }
    return v;
}

Coord BoundedPart::gradient(const Coord& x, int n) const {
    Coord g{0.0, 0.0};
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        const double xd = x[k];
        switch (kind) {
            case BoundedKind::Zero: break;
            case BoundedKind::Harmonic: g[k] = omega * omega * xd; break;
            case BoundedKind::Cosine: g[k] = -amplitude * wavenumber * std::sin(wavenumber * xd); break;
            case BoundedKind::SplineWell: {
                const double s = xd / width;
                if (std::abs(s) < 1.0) g[k] = 4.0 * depth * s * (1.0 - s * s) / width;
                break;
            }
            case BoundedKind::Linear: g[k] = slope[k]; break;
        }
    }
    return g;
}

double BoundedPart::sup_bound(int n) const {
    switch (kind) {
        case BoundedKind::Zero: return 0.0;
        case BoundedKind::Cosine: return n * std::abs(amplitude);
        case BoundedKind::SplineWell: return n * std::abs(depth);
        default: return kInf;
    }
}

double BoundedPart::lipschitz_bound(int n) const {
    const double rn = std::sqrt(static_cast<double>(n));
    switch (kind) {
        case BoundedKind::Zero: return 0.0;
        case BoundedKind::Cosine: return rn * std::abs(amplitude * wavenumber);
        // max_s 4 s (1 - s^2) on [0, 1] is 8 / (3 sqrt 3) at s = 1/sqrt 3.
        case BoundedKind::SplineWell: return rn * 8.0 / (3.0 * std::sqrt(3.0)) * std::abs(depth) / width;
        case BoundedKind::Linear: return std::hypot(slope[0], n > 1 ? slope[1] : 0.0);
        default: return kInf;
    }
}

Potential::Potential(int n, BoundedPart bounded) : n_(n), bounded_(bounded) {
    require(n == 1 || n == 2, ErrorKind::InvalidArgument, "potential dimension must be 1 or 2");
}

Potential::Potential(int n, BoundedPart bounded, std::vector<double> charges, double softening)
    : Potential(n, bounded) {
    require(softening >= 0.0, ErrorKind::InvalidArgument, "softening must be non-negative");
    softening_ = softening;
    if (charges.empty()) return;
    require(static_cast<int>(charges.size()) == n, ErrorKind::InvalidArgument,
            "need one charge per one-dimensional particle coordinate");
    require(n >= 2, ErrorKind::InvalidArgument, "a Coulomb pair needs at least two particles (n = 2)");
    for (double z : charges) require(z > 0.0, ErrorKind::InvalidArgument, "charges must be positive");
    charges_ = std::move(charges);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            pairs_.push_back(CoulombPair{i, j, charges_[static_cast<std::size_t>(i)] * charges_[static_cast<std::size_t>(j)]});
}

Potential Potential::bounded_only() const { return Potential(n_, bounded_); }

Potential Potential::singular_only() const { return Potential(n_, BoundedPart{}, charges_, softening_); }

Potential Potential::with_softening(double delta) const { return Potential(n_, bounded_, charges_, delta); }

Potential Potential::with_scaled_charges(double factor) const {
    // Scaling one charge scales every pair product by the same factor for n = 2.
    auto z = charges_;
    if (!z.empty()) z[0] *= factor;
    return Potential(n_, bounded_, z, softening_);
}

double Potential::dist_to_singular_set(const Coord& x) const {
    double d = kInf;
    for (const auto& pr : pairs_)
        d = std::min(d, std::abs(x[static_cast<std::size_t>(pr.i)] - x[static_cast<std::size_t>(pr.j)]) / std::numbers::sqrt2);
    return d;
}

void Potential::check_off_singular(const Coord& x) const {
    if (pairs_.empty() || softening_ > 0.0) return;
    require(dist_to_singular_set(x) >= 1e-12, ErrorKind::OnSingularSet, "potential evaluated on the singular set");
}

double Potential::singular_value(const Coord& x) const {
    check_off_singular(x);
    double v = 0.0;
    for (const auto& pr : pairs_) {
        const double r = x[static_cast<std::size_t>(pr.i)] - x[static_cast<std::size_t>(pr.j)];
        v += pr.charge_product / std::sqrt(r * r + softening_ * softening_);
    }
    return v;
}

Coord Potential::singular_gradient(const Coord& x) const {
    check_off_singular(x);
    Coord g{0.0, 0.0};
    for (const auto& pr : pairs_) {
        const auto i = static_cast<std::size_t>(pr.i), j = static_cast<std::size_t>(pr.j);
        const double r = x[i] - x[j];
        const double s2 = r * r + softening_ * softening_;
        const double f = -pr.charge_product * r / (s2 * std::sqrt(s2));
        g[i] += f;
        g[j] -= f;
    }
    return g;
}

double Potential::value(const Coord& x) const { return bounded_.value(x, n_) + singular_value(x); }

Coord Potential::gradient(const Coord& x) const {
    Coord g = bounded_.gradient(x, n_);
    const Coord gs = singular_gradient(x);
    g[0] += gs[0];
    g[1] += gs[1];
    return g;
}

double Potential::min_charge_product() const {
    double c = kInf;
    for (const auto& pr : pairs_) c = std::min(c, pr.charge_product);
    return c;
}

double Potential::lower_bound_constant() const { return min_charge_product() / std::numbers::sqrt2; }

double Potential::coulomb_error_constant() const {
    double s = 0.0;
    for (const auto& pr : pairs_) s += 1.0 / pr.charge_product;
    return std::pow(2.0 * std::numbers::pi, -n_) * std::numbers::sqrt2 * s;
}

std::string Potential::describe() const {
    std::ostringstream os;
    os << "n=" << n_ << " bounded=" << to_string(bounded_.kind);
    if (!pairs_.empty()) {
        os << " coulomb_charges=";
        for (std::size_t i = 0; i < charges_.size(); ++i) os << (i ? "," : "") << charges_[i];
        os << " softening=" << softening_;
    }
    return os.str();
}

LowerBoundReport coulomb_lower_bound_check(const Potential& pot, std::span<const Coord> points) {
    LowerBoundReport rep;
    if (!pot.singular_enabled()) {
        rep.vacuous = true;
        return rep;
    }
    const double c = pot.lower_bound_constant();
    for (const auto& x : points) {
        const double us = pot.singular_value(x);
        const double margin = us - c / pot.dist_to_singular_set(x);
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < -1e-12 * us) ++rep.violations;
        ++rep.checked;
    }
    return rep;
}

std::vector<Coord> halton_points(const Potential& pot, const SpatialGrid& box, std::size_t count, double tube) {
    std::vector<Coord> pts;
    static constexpr std::uint64_t bases[2] = {2, 3};
    for (std::uint64_t idx = 1; pts.size() < count && idx < 100 * count + 100; ++idx) {
        Coord x{0.0, 0.0};
        for (int d = 0; d < box.dim(); ++d) {
            const auto& a = box.axis(d);
            x[static_cast<std::size_t>(d)] = a.lo + a.length() * halton(idx, bases[d]);
        }
        if (pot.singular_enabled() && pot.dist_to_singular_set(x) < tube) continue;
        pts.push_back(x);
    }
    return pts;
}

double EnergyFunction::operator()(const Coord& x, const Coord& p) const {
    double k = 0.0;
    for (int d = 0; d < pot_->dim(); ++d) k += p[static_cast<std::size_t>(d)] * p[static_cast<std::size_t>(d)];
    return 0.5 * k + pot_->value(x);
}

double grid_distance_to_singular_set(const Potential& pot, const SpatialGrid& grid) {
    if (!pot.singular_enabled()) return kInf;
    double d = kInf;
    for (std::size_t j = 0; j < grid.size(); ++j) d = std::min(d, pot.dist_to_singular_set(grid.point(j)));
    return d;
}

}  // namespace sclab

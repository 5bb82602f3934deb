#include "sclab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "sclab/error.hpp"

namespace sclab {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ZeroNorm: return "ZeroNorm";
        case ErrorKind::OutOfBox: return "OutOfBox";
        case ErrorKind::OnSingularSet: return "OnSingularSet";
        case ErrorKind::NyquistViolation: return "NyquistViolation";
        case ErrorKind::TailOverflow: return "TailOverflow";
        case ErrorKind::SupportViolation: return "SupportViolation";
        case ErrorKind::NonSeparable: return "NonSeparable";
        case ErrorKind::BoundViolation: return "BoundViolation";
        case ErrorKind::NotNormalized: return "NotNormalized";
        case ErrorKind::Config: return "ConfigError";
    }
    return "Unknown";
}

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

SpatialGrid::SpatialGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
    require(axes_.size() == 1 || axes_.size() == 2, ErrorKind::InvalidArgument,
            "grid dimension must be 1 or 2");
    for (const auto& a : axes_) {
        require(a.count >= 16, ErrorKind::InvalidArgument, "axis needs at least 16 points");
        require(is_power_of_two(a.count), ErrorKind::InvalidArgument,
                "axis point count must be a power of two, got " + std::to_string(a.count));
        require(a.hi > a.lo, ErrorKind::InvalidArgument, "axis upper edge must exceed lower edge");
    }
}

SpatialGrid SpatialGrid::cube(int n, std::size_t count, double lo, double hi) {
    return SpatialGrid(std::vector<Axis>(static_cast<std::size_t>(n), Axis{count, lo, hi}));
}

SpatialGrid SpatialGrid::staggered(int n, std::size_t count, double lo, double hi) {
    std::vector<Axis> axes(static_cast<std::size_t>(n), Axis{count, lo, hi});
    const double shift = 0.5 * (hi - lo) / static_cast<double>(count);
    for (std::size_t d = 1; d < axes.size(); ++d) {
        axes[d].lo += shift;
        axes[d].hi += shift;
    }
    return SpatialGrid(std::move(axes));
}

std::size_t SpatialGrid::size() const {
    std::size_t s = 1;
    for (const auto& a : axes_) s *= a.count;
    return s;
}

double SpatialGrid::cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes_) v *= a.spacing();
    return v;
}

std::array<std::size_t, kMaxDim> SpatialGrid::unflatten(std::size_t flat) const {
    std::array<std::size_t, kMaxDim> idx{0, 0};
    for (int d = dim() - 1; d >= 0; --d) {
        const auto c = axes_[static_cast<std::size_t>(d)].count;
        idx[static_cast<std::size_t>(d)] = flat % c;
        flat /= c;
    }
    return idx;
}

std::size_t SpatialGrid::flatten(const std::array<std::size_t, kMaxDim>& idx) const {
    std::size_t flat = 0;
    for (int d = 0; d < dim(); ++d) flat = flat * axes_[static_cast<std::size_t>(d)].count + idx[static_cast<std::size_t>(d)];
    return flat;
}

Coord SpatialGrid::point(std::size_t flat) const {
    const auto idx = unflatten(flat);
    Coord x{0.0, 0.0};
    for (int d = 0; d < dim(); ++d) x[static_cast<std::size_t>(d)] = axes_[static_cast<std::size_t>(d)].node(idx[static_cast<std::size_t>(d)]);
    return x;
}

double SpatialGrid::margin_to_boundary(const Coord& x) const {
    double m = std::numeric_limits<double>::infinity();
    for (int d = 0; d < dim(); ++d) {
        const auto& a = axes_[static_cast<std::size_t>(d)];
        const double xd = x[static_cast<std::size_t>(d)];
        m = std::min({m, xd - a.lo, a.hi - xd});
    }
    return m;
}

bool SpatialGrid::contains(const Coord& x, double margin) const { return margin_to_boundary(x) >= margin; }

Axis momentum_axis(const Axis& x_axis, double eps) {
    const double dp = 2.0 * std::numbers::pi * eps / x_axis.length();
    const double half = static_cast<double>(x_axis.count / 2);
    const double lo = (-half - 0.5) * dp;
    return Axis{x_axis.count, lo, lo + static_cast<double>(x_axis.count) * dp};
}

std::vector<Axis> momentum_axes(const SpatialGrid& grid, double eps) {
    std::vector<Axis> out;
    for (const auto& a : grid.axes()) out.push_back(momentum_axis(a, eps));
    return out;
}

double nyquist_momentum(const SpatialGrid& grid, double eps) {
    double p = std::numeric_limits<double>::infinity();
    for (const auto& a : grid.axes()) p = std::min(p, std::numbers::pi * eps / a.spacing());
    return p;
}

}  // namespace sclab

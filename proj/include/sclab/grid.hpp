#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace sclab {

// Points in R^n with n <= 2. Unused trailing components stay zero.
using Coord = std::array<double, 2>;

inline constexpr int kMaxDim = 2;

// Cell-centred uniform axis: node(i) = lo + (i + 1/2) * spacing.
struct Axis {
    std::size_t count = 0;
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    double spacing() const { return (hi - lo) / static_cast<double>(count); }
    double node(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * spacing(); }

    bool operator==(const Axis&) const = default;
};

bool is_power_of_two(std::size_t v);

// Periodic position grid on a box in R^n, n in {1, 2}. Values attached to the
// grid are stored row-major with the last axis fastest.
class SpatialGrid {
public:
    SpatialGrid() = default;
    explicit SpatialGrid(std::vector<Axis> axes);

    // Same axis repeated n times.
    static SpatialGrid cube(int n, std::size_t count, double lo, double hi);
    // Like cube, but axis 1 is shifted by half a cell so that x_1 - x_2 is never a
    // multiple of the spacing: no node lies on the diagonal {x_1 = x_2}.
    static SpatialGrid staggered(int n, std::size_t count, double lo, double hi);

    int dim() const { return static_cast<int>(axes_.size()); }
    std::size_t size() const;
    const Axis& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
    const std::vector<Axis>& axes() const { return axes_; }
    double cell_volume() const;

    // Multi-index <-> flat index.
    std::array<std::size_t, kMaxDim> unflatten(std::size_t flat) const;
    std::size_t flatten(const std::array<std::size_t, kMaxDim>& idx) const;
    Coord point(std::size_t flat) const;

    // Distance from x to the nearest box face (min over axes).
    double margin_to_boundary(const Coord& x) const;
    bool contains(const Coord& x, double margin = 0.0) const;

    bool operator==(const SpatialGrid&) const = default;

private:
    std::vector<Axis> axes_;
};

// Dual momentum axis for a position axis and semiclassical parameter eps:
// p_k = 2*pi*eps*k / L for k in [-N/2, N/2), stored centred.
Axis momentum_axis(const Axis& x_axis, double eps);
std::vector<Axis> momentum_axes(const SpatialGrid& grid, double eps);

// Largest |p| representable on the grid (Nyquist momentum pi*eps/dx, min over axes).
double nyquist_momentum(const SpatialGrid& grid, double eps);

}  // namespace sclab

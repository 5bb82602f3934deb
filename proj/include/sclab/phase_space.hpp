#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sclab/potential.hpp"
#include "sclab/spectral.hpp"
#include "sclab/test_function.hpp"

namespace sclab {

enum class FieldKind { Wigner, Husimi };

std::string to_string(FieldKind kind);

// Real field on the tensor grid (x-nodes) x (p-nodes). Values are stored with the
// p index fastest: values[ix * p_size() + ip]. Both node sets are cell-centred
// axes, one per dimension.
struct PhaseSpaceField {
    FieldKind kind = FieldKind::Wigner;
    double eps = 1.0;
    std::vector<Axis> x_axes;
    std::vector<Axis> p_axes;
    std::vector<double> values;
    double source_mass = 1.0;   // ||psi||^2 of the transformed wavefunction
    double imag_residue = 0.0;  // largest discarded imaginary part (Wigner)

    int dim() const { return static_cast<int>(x_axes.size()); }
    std::size_t x_size() const;
    std::size_t p_size() const;
    Coord x_node(std::size_t flat) const;
    Coord p_node(std::size_t flat) const;
    double x_cell() const;
    double p_cell() const;
    double cell_volume() const { return x_cell() * p_cell(); }
    double total() const;
    double min_value() const;
    double at(std::size_t ix, std::size_t ip) const { return values[ix * p_size() + ip]; }
};

// Nodes of axes sharing the row-major layout used everywhere (last axis fastest).
Coord axes_node(const std::vector<Axis>& axes, std::size_t flat);
std::size_t axes_size(const std::vector<Axis>& axes);

struct WignerOptions {
    bool check = true;
    double tail_tolerance = 1e-6;      // boundary-strip mass
    double boundary_fraction = 1.0 / 16.0;
    double nyquist_tolerance = 1e-6;   // mass with |k| >= N/4 (half-band)
};

// W(x_j, p_k) = (pi eps)^{-n} dx^n sum_m psi_{j+m} conj(psi_{j-m}) exp(-2 pi i k.m / N),
// i.e. the y-integral on the lattice s = m dx with psi extended by zero outside the
// box. p_k = pi eps k / L, k in [-N/2, N/2).
PhaseSpaceField wigner(const Wavefunction& psi, const WignerOptions& options = {});

// Husimi transform by coherent-state overlaps on y-nodes that are a sub-lattice of
// the x-grid (stride s), with a local window of M grid points per axis (a multiple
// of 16) around each y; the p-nodes are the window's DFT lattice 2 pi eps q / (M dx).
struct HusimiOptions {
    std::size_t stride = 0;      // 0: largest power of two with s dx <= stride_sigmas sqrt(eps)
    std::size_t window = 0;      // 0: smallest power of two covering +-window_sigmas sqrt(eps)
    double window_sigmas = 8.6;
    double skip_below = 0.0;     // rows whose value bound is below this are set to zero
    double stride_sigmas = 0.35;
    bool compact_window = false; // automatic window rounded to a multiple of 16, not a power of two
};

struct HusimiLayout {
    std::vector<Axis> y_axes;
    std::vector<Axis> p_axes;
    std::size_t stride = 1;
    std::size_t window = 0;
    std::size_t offset = 0;  // grid index of the first y-node on each axis
};

HusimiLayout husimi_layout(const SpatialGrid& grid, double eps, const HusimiOptions& options = {});

// Computes the Husimi values row by row (one y-node at a time) and hands each row
// to the callback in increasing y order. `row` is empty when the row was skipped,
// either by the value bound or because `wanted(y_flat)` returned false.
using HusimiRowCallback = std::function<void(std::size_t y_flat, std::span<const double> row)>;
using HusimiRowFilter = std::function<bool(std::size_t y_flat)>;
void husimi_rows(const Wavefunction& psi, const HusimiLayout& layout, double skip_below,
                 const HusimiRowCallback& callback, const HusimiRowFilter& wanted = {});

PhaseSpaceField husimi(const Wavefunction& psi, const HusimiOptions& options = {});

// Smallest Husimi value computed by any row since start-up (or the last reset).
double husimi_min_observed();
void reset_husimi_min_observed();

// (2 pi)^{-n} |<psi, phi^eps_{y,p}>|^2 evaluated directly at one point.
double husimi_at(const Wavefunction& psi, const Coord& y, const Coord& p);

// Independent path: numerical Wigner field convolved with G_eps^{(2n)}
// (variance eps/2 per coordinate) by separable quadrature on the Wigner grid.
PhaseSpaceField husimi_from_wigner(const PhaseSpaceField& w);

// Marginals of a field: integral over p (per x-node) and over x (per p-node).
std::vector<double> x_marginal(const PhaseSpaceField& f);
std::vector<double> p_marginal(const PhaseSpaceField& f);

// Reference densities for the marginal identities.
std::vector<double> position_density(const Wavefunction& psi);
// (2 pi eps)^{-n} |F_eps psi|^2 at the nodes of p_axes (direct transform sums).
std::vector<double> momentum_density(const Wavefunction& psi, const std::vector<Axis>& p_axes);
// |psi|^2 * G_eps^{(n)} at the nodes of y_axes.
std::vector<double> smoothed_position_density(const Wavefunction& psi, const std::vector<Axis>& y_axes);
// momentum density * G_eps^{(n)} at the nodes of p_axes.
std::vector<double> smoothed_momentum_density(const Wavefunction& psi, const std::vector<Axis>& p_axes);

// Quadrature of f(x, p) over the field.
double integrate(const PhaseSpaceField& f, const std::function<double(const Coord&, const Coord&)>& fn);

// Separable quadrature: sum_x a(x) sum_p b(p) field.
double integrate_separable(const PhaseSpaceField& f, const std::function<double(const Coord&)>& a,
                           const std::function<double(const Coord&)>& b);

struct PairingResult {
    double value = 0.0;
    double bound = 0.0;   // (2 pi)^{-n} ||phi||_A ||psi||^2
    double a_norm = 0.0;
};

// int phi dW with the estimate |.| <= (2 pi)^{-n} ||phi||_A ||psi||^2; throws
// BoundViolation when the quadrature breaks it.
PairingResult pair(const PhaseSpaceField& field, const TestFunction& phi);
PairingResult pair(const Wavefunction& psi, const TestFunction& phi);

struct MomentumMoment {
    double wigner_side = 0.0;    // int |p|^2 W dx dp on the Wigner grid
    double gradient_side = 0.0;  // int |eps grad psi|^2 dx with spectral derivatives
};

MomentumMoment momentum_second_moment(const Wavefunction& psi);

// Smooth time weight vanishing to all orders at 0 and T: bump((2t - T)/T).
struct TimeWindow {
    double T = 1.0;
    double value(double t) const;
    double derivative(double t) const;
};

struct ResidualReport {
    double residual = 0.0;
    double derivative_term = 0.0;  // int phi'(t) int phi dW_t dt
    double transport_term = 0.0;   // int phi(t) int <b, grad phi> dW_t dt
    std::vector<double> pairings;  // int phi dW_t per sample
    std::vector<double> transports;
};

// |int_0^T [w'(t) int phi dW~_t + w(t) int <b, grad phi> dW~_t] dt| with b = (p, -grad U),
// trapezoid rule over equally spaced samples (exact to high order because w is flat at
// both ends). Throws SupportViolation when the x-support of phi comes within `tube` of S.
ResidualReport husimi_pde_residual(std::span<const double> times, std::span<const Wavefunction> path,
                                   const Potential& pot, const TestFunction& phi, const TimeWindow& window,
                                   const HusimiOptions& options = {}, double tube = 0.05);

// Binary dump: spectral_core header with version 2, followed by a field-kind u32 and
// the p-axis block (u32 N, f64 lo, f64 hi per axis); data are (value, 0) f64 pairs
// in the field's storage order.
inline constexpr unsigned kDumpVersionPhaseSpace = 2;
void write_dump(const std::filesystem::path& path, const PhaseSpaceField& field);
PhaseSpaceField read_phase_space_dump(const std::filesystem::path& path);

// CSV slice at a fixed x-node (columns p..., value) or fixed p-node (x..., value).
void write_x_slice_csv(const std::filesystem::path& path, const PhaseSpaceField& field, std::size_t ix);
void write_p_slice_csv(const std::filesystem::path& path, const PhaseSpaceField& field, std::size_t ip);

// Index of the node nearest to a point.
std::size_t nearest_x_index(const PhaseSpaceField& field, const Coord& x);
std::size_t nearest_p_index(const PhaseSpaceField& field, const Coord& p);

}  // namespace sclab

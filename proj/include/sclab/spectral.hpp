#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "sclab/fft.hpp"
#include "sclab/grid.hpp"

namespace sclab {

// Complex field on a periodic grid together with its semiclassical parameter.
struct Wavefunction {
    SpatialGrid grid;
    double eps = 1.0;
    std::vector<cplx> values;

    Wavefunction() = default;
    Wavefunction(SpatialGrid g, double e);
    Wavefunction(SpatialGrid g, double e, std::vector<cplx> v);

    double norm_squared() const;  // sum |psi_j|^2 dx^n
    double norm() const;
};

// <a, b> = sum conj(a_j) b_j dx^n.
cplx inner_product(const Wavefunction& a, const Wavefunction& b);

// Throws ZeroNorm when the discrete L2 norm is below 1e-300.
Wavefunction normalize(Wavefunction psi);

// Samples of (F psi)(p / eps) = int exp(-i p.x / eps) psi(x) dx on the centred
// momentum grid. Momentum density is |values|^2 / (2 pi eps)^n.
struct MomentumField {
    std::vector<Axis> axes;
    double eps = 1.0;
    std::vector<cplx> values;

    double cell_volume() const;
};

MomentumField eps_fourier(const Wavefunction& psi);
Wavefunction inverse_eps_fourier(const MomentumField& phi, const SpatialGrid& grid);

// Evaluates F_eps psi at arbitrary momenta by direct summation.
cplx eps_fourier_at(const Wavefunction& psi, const Coord& p);

// Spectral mass (fraction of ||psi||^2) carried by modes with |k_d| >= band * N_d / 2
// on any axis. band = 1 would be empty; 0.75 covers the outer quarter of the range.
double spectral_band_mass(const Wavefunction& psi, double band);

// Mass in cells within `fraction` of the box width from any face.
double boundary_mass(const Wavefunction& psi, double fraction);

// Mass outside the ball of radius r around the origin.
double tail_mass(const Wavefunction& psi, double radius);

// Expectation of position.
Coord mean_position(const Wavefunction& psi);

// Gaussian coherent state centred at (y, p). `raw_norm` is the L2 norm of the
// unnormalised profile eps^{-n/2} (pi eps)^{-n/4} exp(-|x-y|^2/(2 eps)) exp(i p.x/eps),
// which is eps^{-n/2}; `psi` is the unit-norm version.
struct CoherentState {
    Wavefunction psi;
    double raw_norm = 0.0;
};

CoherentState coherent_state(const SpatialGrid& grid, double eps, const Coord& y, const Coord& p);

// Unnormalised coherent-state values exp(-|x-y|^2/(2 eps)) exp(i p.x/eps) * amplitude,
// no margin checks. Used by overlap computations and tests.
std::vector<cplx> coherent_profile(const SpatialGrid& grid, double eps, const Coord& y, const Coord& p);

// Smooth compact (or Gaussian) profile phi0 used by wave packets.
enum class EnvelopeKind { Bump, Gaussian };

struct Envelope {
    EnvelopeKind kind = EnvelopeKind::Bump;
    double radius = 1.0;  // support radius for Bump, standard width for Gaussian

    // Product over axes of the 1-D profile at u / radius.
    double operator()(const Coord& u, int n) const;
    double profile_1d(double u) const;
    // Half-width of the region carrying all but roundoff of the profile.
    double effective_radius() const;
};

// eps^{-n alpha/2} phi0((x - x0)/eps^alpha) exp(i x.p0/eps), normalised.
struct WavePacket {
    Wavefunction psi;
    Coord x0{0.0, 0.0};
    Coord p0{0.0, 0.0};
    double alpha = 0.5;
};

WavePacket wave_packet(const SpatialGrid& grid, double eps, double alpha, const Coord& x0, const Coord& p0,
                       const Envelope& envelope);

// Binary dump: "SCLB", u32 version, u32 n, per axis (u32 N, f64 lo, f64 hi), f64 eps,
// then row-major (re, im) f64 pairs. Little-endian throughout.
inline constexpr unsigned kDumpVersionWavefunction = 1;
void write_dump(const std::filesystem::path& path, const Wavefunction& psi);
Wavefunction read_dump(const std::filesystem::path& path);

}  // namespace sclab

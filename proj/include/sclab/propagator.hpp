#pragma once

#include <functional>
#include <vector>

#include "sclab/potential.hpp"
#include "sclab/spectral.hpp"

namespace sclab {

struct PropagatorConfig {
    double dt = 0.0;                 // 0 selects default_time_step
    double tail_tolerance = 1e-6;    // max mass allowed in the boundary strip
    double boundary_fraction = 1.0 / 16.0;
    double nyquist_tolerance = 1e-6; // max spectral mass in the outer momentum band
    double nyquist_band = 0.75;      // outer band: |k| >= band * N/2
    std::vector<double> tail_radii{2.0, 4.0};
};

// min(eps / (10 sup_grid |U|), dx^2 / (10 eps) * 2 / pi).
double default_time_step(const SpatialGrid& grid, double eps, const Potential& pot);

struct QuantumDiagnostics {
    double t = 0.0;
    double mass = 0.0;
    double energy = 0.0;          // int |eps grad psi|^2 / 2 + U |psi|^2
    double h_norm2 = 0.0;         // int |H_eps psi|^2
    double coulomb_moment = 0.0;  // int U_s^2 |psi|^2
    std::vector<double> tail;     // mass outside B_R for each configured radius
    double boundary = 0.0;        // mass in the boundary strip
    double spectral_outer = 0.0;  // fraction of mass in the outer momentum band
};

// Strang splitting exp(-i dt U/(2 eps)) exp(-i dt |p|^2/(2 eps)) exp(-i dt U/(2 eps))
// with exact phase factors. Phase tables are built once for a grid, eps, potential
// and step; the object is then reusable for many steps and wavefunctions.
class StrangPropagator {
public:
    StrangPropagator(const SpatialGrid& grid, double eps, const Potential& pot, double dt,
                     const PropagatorConfig& config);

    double dt() const { return dt_; }

    // Advances psi in place by one step; throws NyquistViolation / TailOverflow.
    void step(Wavefunction& psi) const;

    // Grid samples of U and U_s (U_s zero without a singular part).
    const std::vector<double>& potential_values() const { return u_; }
    const std::vector<double>& singular_values() const { return us_; }

private:
    void check_guards(double boundary, double spectral_outer) const;

    SpatialGrid grid_;
    double eps_;
    double dt_;
    PropagatorConfig config_;
    std::vector<std::size_t> shape_;
    std::vector<double> u_, us_;
    std::vector<cplx> half_potential_phase_;
    std::vector<cplx> kinetic_phase_;  // includes the 1/N^n inverse-FFT normalisation
    std::vector<std::size_t> outer_band_;
    std::vector<std::size_t> boundary_strip_;
};

// One step with a freshly built propagator.
Wavefunction step(const Wavefunction& psi, const Potential& pot, const PropagatorConfig& config);

QuantumDiagnostics diagnostics(const Wavefunction& psi, const Potential& pot, const PropagatorConfig& config = {});

// Right-hand side of the a-priori Coulomb-moment estimate:
// int |H psi0|^2 + 2 sup|U_b| (<psi0, H psi0> + sup|U_b|).
double coulomb_moment_budget(const QuantumDiagnostics& initial, const Potential& pot);

// Applies H_eps = -eps^2 Laplacian / 2 + U.
Wavefunction apply_hamiltonian(const Wavefunction& psi, const Potential& pot);

// Spectral gradient component d/dx_axis psi.
Wavefunction spectral_derivative(const Wavefunction& psi, int axis);

struct Trajectory {
    std::vector<double> times;
    std::vector<Wavefunction> states;  // filled when keep_states
    std::vector<QuantumDiagnostics> diagnostics;
    double dt = 0.0;
    std::size_t steps = 0;
};

using SampleCallback = std::function<void(std::size_t index, double t, const Wavefunction& psi)>;

// Evolves to T and records diagnostics at `samples` equally spaced times in [0, T]
// (both ends included). The step is shrunk so every sample time is hit exactly.
Trajectory propagate(const Wavefunction& psi0, const Potential& pot, double T, std::size_t samples,
                     const PropagatorConfig& config, bool keep_states = false,
                     const SampleCallback& callback = {});

}  // namespace sclab

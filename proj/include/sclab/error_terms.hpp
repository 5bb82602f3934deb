#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "sclab/phase_space.hpp"
#include "sclab/potential.hpp"
#include "sclab/spectral.hpp"
#include "sclab/test_function.hpp"

namespace sclab {

// One evaluation of an error functional paired with a test function.
struct ErrorPairing {
    double eps = 0.0;
    double pairing = 0.0;       // int I_eps(V, psi) phi (or E_eps)
    double transport = 0.0;     // int <grad V, grad_p phi> dW~ (Husimi)
    double discrepancy = 0.0;   // pairing + transport
    double bound = 0.0;         // applicable a-priori bound; +inf when none applies
    double region_outer = 0.0;  // part of the pairing from sqrt(eps)|y| > 1
    double region_inner = 0.0;  // part from sqrt(eps)|y| <= 1
    double imag_residue = 0.0;  // |Im| of the lattice sum (should be roundoff)
};

// Lattice quadrature of the (x, y) double integral
//   -i (2 pi)^{-n} int int K(x, y) psi(x + eps y/2) conj(psi(x - eps y/2)) F_p phi(x, y) dx dy
// on the y-lattice y = 2 m dx / eps, where psi and V are sampled at grid nodes and
// psi is zero outside the box. The kernel K is chosen by the functions below.
struct LatticePairing {
    double total = 0.0;
    double inner = 0.0;  // sqrt(eps)|y| <= 1
    double outer = 0.0;
    double imag_residue = 0.0;
};

// K = [V(x + eps y/2) - V(x - eps y/2)] / eps.
LatticePairing i_eps_pairing(const Wavefunction& psi, const Potential& V, const TestFunction& phi);
// K = [V(x + eps y/2) - V(x - eps y/2)] / eps - <grad V(x), y>.
LatticePairing e_eps_pairing(const Wavefunction& psi, const Potential& V, const TestFunction& phi);

// int <grad V, grad_p phi> dW on a Wigner field (grid quadrature) and on the Husimi
// transform of psi (streamed rows restricted to the x-support of phi).
double transport_wigner(const PhaseSpaceField& wigner_field, const Potential& V, const TestFunction& phi);
double transport_husimi(const Wavefunction& psi, const Potential& V, const TestFunction& phi,
                        const HusimiOptions& options = {});

// (2 pi)^{-n} ||grad V||_inf int |y| sup_x |F_p phi|(x, y) dy.
double bound_lipschitz(double gradient_sup, const TestFunction& phi);
double bound_lipschitz(const Potential& V, const TestFunction& phi);

// int U_s^2 |psi|^2: grid quadrature, and the same integral after trigonometric
// interpolation onto a grid refined by an odd factor (nodes stay off S).
double coulomb_moment(const Wavefunction& psi, const Potential& pot);
double coulomb_moment_refined(const Wavefunction& psi, const Potential& pot, std::size_t factor = 3);

// C* int |y| sup_x |F_p phi| dy * int U_s^2 |psi|^2.
double bound_coulomb(const Wavefunction& psi, const Potential& pot, const TestFunction& phi);
// Same with the y-integral restricted to sqrt(eps)|y| > 1.
double bound_coulomb_outer(const Wavefunction& psi, const Potential& pot, const TestFunction& phi);

struct PairingOptions {
    HusimiOptions husimi;
    double tube = 0.05;  // minimal distance of the x-support of phi to S
};

// I_eps pairing of V with the Husimi transport term. The bound is the Lipschitz
// bound for bounded V, the Coulomb bound for a purely singular V, +inf otherwise.
// Throws SupportViolation when V is singular and phi reaches the tube around S.
ErrorPairing pair_I_eps(const Potential& V, const Wavefunction& psi, const TestFunction& phi,
                        const PairingOptions& options = {});

// |int I_eps(U_s, psi) (phi * G_eps) + int <grad U_s, grad_p phi> dW~| with the
// smoothing applied in all 2n variables; the y-lattice is split at sqrt(eps)|y| = 1
// and the outer-region bound is reported in `bound`.
ErrorPairing coulomb_discrepancy(const Wavefunction& psi, const Potential& pot, const TestFunction& phi,
                                 const PairingOptions& options = {});

// CSV with columns eps,pairing,transport,discrepancy,bound,region_outer,region_inner.
void write_error_csv(const std::filesystem::path& path, std::span<const ErrorPairing> rows);

}  // namespace sclab

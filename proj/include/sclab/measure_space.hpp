#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sclab/classical_flow.hpp"
#include "sclab/phase_space.hpp"

namespace sclab {

// Phase-space box (x-range and p-range per axis) the dictionary is fitted to.
struct PhaseBox {
    int n = 1;
    Coord x_lo{-1.0, -1.0}, x_hi{1.0, 1.0};
    Coord p_lo{-1.0, -1.0}, p_hi{1.0, 1.0};
};

// f(x, p) = prod over the 2n coordinates z_d of exp(-(z_d - c_d)^2 / (2 s_d^2)) cos(w_d z_d + theta_d).
struct DictionaryMember {
    std::vector<double> centre, width, frequency, phase;  // length 2n: x axes then p axes
    double lipschitz = 0.0;                                // recorded bound on Lip(f)

    double factor(std::size_t d, double z) const;
    double operator()(const Coord& x, const Coord& p, int n) const;
};

struct TestDictionary {
    int n = 1;
    std::uint64_t seed = 0;
    PhaseBox box;
    std::vector<DictionaryMember> members;

    // Envelope widths are 1.5 times the box half-widths; frequencies are integer
    // multiples 0..max_harmonic of pi / (1.5 box width) per coordinate.
    static TestDictionary build(const PhaseBox& box, std::size_t K = 64, std::uint64_t seed = 1, int max_harmonic = 4);

    std::size_t size() const { return members.size(); }
    double weight(std::size_t k) const;  // 2^{-(k+1)}
    // sum_k 2^{-k} L_k.
    double lipschitz_sum() const;
    // Largest |f_k| and worst neighbour Lipschitz ratio on a lattice of `per_axis` nodes per coordinate.
    struct Verification {
        double max_abs = 0.0;
        double max_lipschitz_ratio = 0.0;
    };
    Verification verify(std::size_t per_axis = 17) const;
    // "seed = ..., K = ..." plus one line per member with its frequency table.
    std::string describe() const;
};

// Vectors of int f_k d mu.
std::vector<double> dictionary_integrals(const TestDictionary& dict, const ParticleEnsemble& mu);
std::vector<double> dictionary_integrals(const TestDictionary& dict, const PhaseSpaceField& field);
// Husimi transform of psi, streamed row by row without storing the field.
std::vector<double> dictionary_integrals_husimi(const TestDictionary& dict, const Wavefunction& psi,
                                                const HusimiOptions& options = {});

// sum_k 2^{-k} |a_k - b_k|.
double d_P(const TestDictionary& dict, std::span<const double> a, std::span<const double> b);
// Argument checks: ensembles weigh 1 within 1e-12, fields integrate to 1 within
// `field_tolerance`; NotNormalized otherwise.
double d_P(const TestDictionary& dict, const ParticleEnsemble& mu, const ParticleEnsemble& nu);
double d_P(const TestDictionary& dict, const PhaseSpaceField& mu, const PhaseSpaceField& nu, double field_tolerance = 1e-3);
double d_P(const TestDictionary& dict, const PhaseSpaceField& mu, const ParticleEnsemble& nu, double field_tolerance = 1e-3);

// Weighted union; probabilities are normalised by their sum.
ParticleEnsemble expectation_measure(std::span<const ParticleEnsemble> samples, std::span<const double> probabilities);

struct RegularityReport {
    double max_density = 0.0;
    double bound = 0.0;
    double kernel_width = 0.0;
    double tolerance = 0.1;
    bool regular = false;  // max_density <= bound * (1 + tolerance)
};

// Gaussian kernel-density estimate of the spatial density sum_i w_i delta_{x_i},
// maximised over a lattice of spacing h/2 covering the particles.
RegularityReport regularity_check(const ParticleEnsemble& mu, double bound, double kernel_width, double tolerance = 0.1);

}  // namespace sclab

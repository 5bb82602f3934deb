#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "sclab/phase_space.hpp"
#include "sclab/potential.hpp"
#include "sclab/test_function.hpp"

namespace sclab {

struct Particle {
    Coord x{0.0, 0.0};
    Coord p{0.0, 0.0};
    double weight = 0.0;
    bool absorbed = false;  // came within r_guard of the singular set
};

// Weighted phase-space particles representing a probability measure on R^{2n}.
struct ParticleEnsemble {
    int n = 1;
    std::vector<Particle> particles;

    std::size_t size() const { return particles.size(); }
    double total_weight() const;
    double absorbed_weight() const;
    // Throws InvalidArgument unless weights are >= 0 and sum to 1 within 1e-12.
    void validate() const;

    static ParticleEnsemble dirac(int n, const Coord& x, const Coord& p);
    // Equal weights.
    static ParticleEnsemble uniform(int n, std::span<const Coord> xs, std::span<const Coord> ps);
};

// Union with weights alpha and 1 - alpha.
ParticleEnsemble mix(const ParticleEnsemble& a, const ParticleEnsemble& b, double alpha);

struct FlowConfig {
    double h = 1e-3;                 // base step
    double r_guard = 1e-3;           // absorption radius around S
    double energy_cutoff = std::numeric_limits<double>::infinity();  // E above this: reduced step
    double cutoff_step_factor = 0.1;
    double beta = 2.0;               // exponent of the integrability diagnostic
    std::size_t max_steps = 50'000'000;

    void validate() const;
    // h * min(1, (dist / r_ref)^2) with r_ref = 10 r_guard, further reduced above
    // the energy cutoff.
    double local_step(double dist, double energy) const;
};

// b(x, p) = (p, -grad U(x)).
struct PhasePoint {
    Coord x{0.0, 0.0};
    Coord p{0.0, 0.0};
};

struct FlowTrajectory {
    std::vector<double> times;
    std::vector<PhasePoint> points;
    bool absorbed = false;
    double absorbed_at = std::numeric_limits<double>::infinity();
    std::size_t steps = 0;
};

// Velocity Verlet from (x, p) to T, recording `samples` equally spaced times in
// [0, T] (both ends). Steps shrink near S; after absorption the state is frozen.
FlowTrajectory flow_map(const Coord& x, const Coord& p, const Potential& pot, double T, std::size_t samples,
                        const FlowConfig& config);

// One velocity Verlet step of size dt.
PhasePoint verlet_step(const PhasePoint& z, const Potential& pot, int n, double dt);

// Sampled push-forward of an ensemble: states[s] is mu at times[s].
struct MeasurePath {
    std::vector<double> times;
    std::vector<ParticleEnsemble> states;
    std::vector<double> absorbed_mass;  // per sample time
};

MeasurePath push_forward(const ParticleEnsemble& mu, const Potential& pot, double T, std::size_t samples,
                         const FlowConfig& config);

// |int [w'(t) int phi dmu_t + w(t) int <b, grad phi> dmu_t] dt| by particle sums and
// the trapezoid rule; absorbed particles are left out. Throws SupportViolation when
// the x-support of phi comes within `tube` of S.
double liouville_residual(const MeasurePath& path, const Potential& pot, const TestFunction& phi,
                          const TimeWindow& window, double tube = 0.05);

struct IntegrabilityReport {
    double value = 0.0;                 // int_0^T int_{B_R} dist^{-beta} dmu_t dt
    std::vector<double> deltas;
    std::vector<double> regularized;    // same with (dist^beta + delta)^{-1}
    double excluded_mass = 0.0;         // largest absorbed mass over the samples
};

// B_R is the phase-space ball |(x, p)| <= R.
IntegrabilityReport dist_integrability(const MeasurePath& path, const Potential& pot, double R, double beta,
                                       std::span<const double> deltas = {});

// CSV with columns id,x...,p...,weight,flag.
void write_ensemble_csv(const std::filesystem::path& path, const ParticleEnsemble& mu);
// One ensemble CSV per sample plus index.csv (sample,t,file,absorbed_mass).
void write_measure_path(const std::filesystem::path& dir, const MeasurePath& path);

}  // namespace sclab

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sclab/classical_flow.hpp"
#include "sclab/measure_space.hpp"
#include "sclab/propagator.hpp"
#include "sclab/rng.hpp"

namespace sclab {

enum class DensityKind { UniformBox, TruncatedGaussian, Dirac };

DensityKind density_kind_from_string(const std::string& s);
std::string to_string(DensityKind kind);

// Law rho of the label w = (x0, p0). UniformBox uses `box`; TruncatedGaussian has
// mean (x_mean, p_mean), standard deviation sigma per coordinate and is cut to `box`;
// Dirac puts all mass on (x_mean, p_mean) (the control family without averaging).
struct LabelDensity {
    DensityKind kind = DensityKind::UniformBox;
    PhaseBox box;
    Coord x_mean{0.0, 0.0}, p_mean{0.0, 0.0};
    double sigma = 0.5;

    void validate() const;
    // Supremum of the density on R^{2n} (inf for Dirac).
    double sup() const;
    void sample(Rng& rng, Coord& x, Coord& p) const;
};

struct RandomFamily {
    int n = 1;
    LabelDensity rho;
    double alpha = 0.5;
    Envelope envelope{EnvelopeKind::Gaussian, 1.0};
    std::uint64_t seed = 1;
    std::size_t samples = 64;  // N_w
    std::size_t cloud = 256;   // particles in the limit clouds for alpha = 0 or 1
};

struct FamilySample {
    std::size_t index = 0;
    Coord x0{0.0, 0.0}, p0{0.0, 0.0};
    Wavefunction psi;
    ParticleEnsemble limit;  // i(w)
};

// Labels only (same seed, same list).
std::vector<std::pair<Coord, Coord>> sample_labels(const RandomFamily& family);
// Packets on `grid`; throws OutOfBox when a packet does not fit.
std::vector<FamilySample> sample_family(const RandomFamily& family, const SpatialGrid& grid, double eps);

// Limit measure i(w) of one packet.
ParticleEnsemble limit_measure(const RandomFamily& family, const Coord& x0, const Coord& p0);

// Stratified inverse-transform quantiles of (2 pi)^{-1} |F phi0|^2 (for alpha = 1) or
// |phi0|^2 (for alpha = 0), normalised, in one dimension.
std::vector<double> envelope_momentum_quantiles(const Envelope& env, std::size_t count);
std::vector<double> envelope_position_quantiles(const Envelope& env, std::size_t count);
// Normalised 1-D momentum density (2 pi)^{-1} |F phi0|^2 / ||phi0||^2.
double envelope_momentum_density(const Envelope& env, double xi);

// Smallest power-of-two grid (>= min_count) whose Nyquist band `band * pi eps / dx`
// covers `p_extent`.
SpatialGrid grid_for_eps(int n, double lo, double hi, double eps, double p_extent, bool staggered,
                         std::size_t min_count = 64, double band = 0.6);

// Quantum evolution of a whole family at `time_samples` equal times in [0, T].
struct FamilyEvolution {
    double eps = 0.0;
    std::vector<double> times;
    std::vector<std::vector<Wavefunction>> states;  // [time][kept sample]
    std::vector<std::size_t> kept;                  // sample indices that stayed in the box
    std::vector<std::size_t> excluded;              // TailOverflow
};

FamilyEvolution evolve_family(const std::vector<FamilySample>& samples, const Potential& pot, double T,
                              std::size_t time_samples, const PropagatorConfig& config = {});

// |psi * G_delta|^2 with G_delta(x) = (pi delta)^{-n/2} exp(-|x|^2 / delta), via FFT.
std::vector<double> smoothed_density(const Wavefunction& psi, double delta);

struct OperatorReport {
    double eps = 0.0;
    std::size_t samples = 0;
    std::vector<double> lambdas;
    std::vector<double> smoothed_sup;      // sup_y mean_w |psi * G_{2 lambda eps^2}|^2(y)
    std::vector<double> implied_constant;  // smoothed_sup * lambda^{n/2}
    double husimi_sup = 0.0;               // sup of the w-averaged Husimi field
    double husimi_stderr = 0.0;            // Monte-Carlo error of the average at the argmax
    Coord argmax_x{0.0, 0.0}, argmax_p{0.0, 0.0};
    std::vector<double> probe_values;      // averaged Husimi at the probe points
};

OperatorReport operator_inequality_diagnostics(std::span<const Wavefunction> states, std::span<const double> lambdas,
                                               std::span<const PhasePoint> probes = {}, const HusimiOptions& options = {});

// max / min <= factor for positive values.
bool bounded_across_ladder(std::span<const double> values, double factor = 2.0);

struct NoConcentrationReport {
    std::vector<double> times;
    std::vector<OperatorReport> per_time;
    bool persists = false;  // sup at each t <= 2 sup at t = 0 + 3 Monte-Carlo errors
};

// Evaluated at the first, middle and last sample time of the evolution.
NoConcentrationReport no_concentration_diagnostics(const FamilyEvolution& evo, std::span<const double> lambdas,
                                                   std::span<const PhasePoint> probes = {}, const HusimiOptions& options = {});

struct TightnessReport {
    std::vector<double> radii;
    std::vector<double> tail_initial;   // mean_w mass outside |x| <= R at t = 0
    std::vector<double> tail_sup;       // sup_t of the same
    double mean_energy = 0.0;
    double fitted_c = 0.0;              // max_R (tail_sup - tail_initial) R / (T (1 + energy))
    std::vector<double> time_variation; // sum_s |a_k(t_{s+1}) - a_k(t_s)|, a_k = mean_w int f_k dW~
    bool tails_shrink = false;          // tail_sup non-increasing in R
    bool variation_bounded = false;     // every time variation <= 2 sup|f_k| T-independent bound 2
};

TightnessReport tightness_diagnostics(const FamilyEvolution& evo, const Potential& pot, std::span<const double> radii,
                                      const TestDictionary& dict, const HusimiOptions& options = {});

struct ExperimentConfig {
    double box_lo = -4.0, box_hi = 4.0;
    double box_growth = 0.0;         // each face moves out by box_growth * sqrt(eps)
    double spread_sigmas = 5.0;      // momentum spread of a packet in units of eps^{1-alpha}/radius
    bool staggered = false;          // use for Coulomb pairs so no node sits on S
    double momentum_reach = 2.0;     // largest classical |p| along the dynamics
    std::size_t min_points = 64;
    double grid_band = 0.6;          // fraction of the Nyquist momentum the reach must fit in
    std::size_t time_samples = 16;
    PropagatorConfig propagator;     // dt = 0 picks the step per eps
    double dt_eps_factor = 0.0;      // > 0: dt = min(factor * eps, kinetic rule) instead of the default rule
    HusimiOptions husimi{0, 0, 8.6, 1e-14, 0.35, false};
    FlowConfig flow;
    std::size_t dictionary_size = 64;
    std::uint64_t dictionary_seed = 1;
    int max_harmonic = 4;
    // Singular diagnostics.
    double integrability_radius = 10.0;
    double beta = 2.0;
    double max_exclusion = 0.01;
};

struct ConvergenceRow {
    double eps = 0.0;
    double D = 0.0;
    double std_error = 0.0;
    double excluded_fraction = 0.0;
    std::size_t samples = 0;
    std::size_t grid_points = 0;     // per axis
    double dt = 0.0;
    double absorbed_mass = 0.0;      // mean classical absorbed mass at T
    double integrability_classical = 0.0;  // mean_w int int dist^{-beta} d mu_t dt
    double integrability_quantum = 0.0;    // mean_w int int dist^{-beta} |psi_t|^2 dx dt
    double t0_distance = 0.0;        // mean_w d_P(W~ psi_0, i(w))
};

struct ConvergenceDetail {
    double eps = 0.0;
    std::size_t sample = 0;
    std::size_t time_index = 0;
    double t = 0.0;
    double distance = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    std::vector<ConvergenceDetail> details;
    TestDictionary dictionary;
    double T = 0.0;
    bool decreasing() const;  // D strictly decreasing along the ladder
};

// Grid used for one rung of the ladder: the experiment box grown by box_growth sqrt(eps),
// resolving momentum_reach plus the packet's momentum spread.
SpatialGrid experiment_grid(const RandomFamily& family, const ExperimentConfig& config, double eps);

ConvergenceReport run_convergence_experiment(const RandomFamily& family, const Potential& pot, double T,
                                             std::span<const double> eps_ladder, const ExperimentConfig& config);

// Columns eps,D,stderr,excluded_fraction.
void write_convergence_csv(const std::filesystem::path& path, const ConvergenceReport& report);
// Columns eps,sample,time_index,t,d_P.
void write_convergence_details_csv(const std::filesystem::path& path, const ConvergenceReport& report);
// Columns eps,samples,grid_points,dt,absorbed_mass,integrability_classical,integrability_quantum,t0_distance.
void write_convergence_diagnostics_csv(const std::filesystem::path& path, const ConvergenceReport& report);

}  // namespace sclab

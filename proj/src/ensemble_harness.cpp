#include "sclab/ensemble_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "sclab/error.hpp"
#include "sclab/fft.hpp"
#include "sclab/parallel.hpp"
#include "sclab/rng.hpp"

namespace sclab {

namespace {

constexpr double kPi = std::numbers::pi;

double phase_volume(const PhaseBox& b) {
    double v = 1.0;
    for (int d = 0; d < b.n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        v *= (b.x_hi[k] - b.x_lo[k]) * (b.p_hi[k] - b.p_lo[k]);
    }
    return v;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double truncated_normal(Rng& rng, double mean, double sigma, double lo, double hi) {
    for (int tries = 0; tries < 1'000'000; ++tries) {
        const double v = mean + sigma * rng.normal();
        if (v >= lo && v <= hi) return v;
    }
    throw Error(ErrorKind::InvalidArgument, "truncation box carries no Gaussian mass");
}

// Tabulated 1-D density on an equally spaced grid with stratified quantiles.
struct Table {
    std::vector<double> z, density;
};

std::vector<double> quantiles(const Table& t, std::size_t count) {
    std::vector<double> cdf(t.z.size(), 0.0);
    for (std::size_t i = 1; i < t.z.size(); ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (t.density[i] + t.density[i - 1]) * (t.z[i] - t.z[i - 1]);
    const double total = cdf.back();
    std::vector<double> q(count);
    std::size_t seg = 1;
    for (std::size_t i = 0; i < count; ++i) {
        const double target = total * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
        while (seg + 1 < cdf.size() && cdf[seg] < target) ++seg;
        const double span = cdf[seg] - cdf[seg - 1];
        const double f = span > 0.0 ? (target - cdf[seg - 1]) / span : 0.5;
        q[i] = t.z[seg - 1] + f * (t.z[seg] - t.z[seg - 1]);
    }
    return q;
}

double transform_extent(const Envelope& env) {
    // |F phi0|^2 beyond this carries less than ~1e-12 of the mass.
    return (env.kind == EnvelopeKind::Gaussian ? 10.0 : 150.0) / env.radius;
}

struct EnvelopeSamples {
    std::vector<double> u, f;
    double hu = 0.0, norm2 = 0.0;
};

EnvelopeSamples envelope_samples(const Envelope& env) {
    constexpr std::size_t U = 4097;
    const double R = env.effective_radius();
    EnvelopeSamples s;
    s.hu = 2.0 * R / static_cast<double>(U - 1);
    s.u.resize(U);
    s.f.resize(U);
    for (std::size_t i = 0; i < U; ++i) {
        s.u[i] = -R + s.hu * static_cast<double>(i);
        s.f[i] = env({s.u[i], 0.0}, 1);
        s.norm2 += s.f[i] * s.f[i] * s.hu;
    }
    return s;
}

// (2 pi)^{-1} |F phi0(xi)|^2 / |phi0|^2 by the trapezoid rule, which is spectrally
// accurate for profiles vanishing smoothly at the ends.
double transform_density(const EnvelopeSamples& s, double xi) {
    double re = 0.0, im = 0.0;
    const std::size_t U = s.u.size();
    for (std::size_t i = 0; i < U; ++i) {
        const double w = (i == 0 || i + 1 == U) ? 0.5 : 1.0;
        re += w * s.f[i] * std::cos(xi * s.u[i]);
        im -= w * s.f[i] * std::sin(xi * s.u[i]);
    }
    re *= s.hu;
    im *= s.hu;
    return (re * re + im * im) / (2.0 * kPi * s.norm2);
}

const Table& momentum_table(const Envelope& env) {
    static std::mutex mu;
    static std::map<std::pair<int, double>, Table> cache;
    std::lock_guard lock(mu);
    const auto key = std::make_pair(static_cast<int>(env.kind), env.radius);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const double xi_max = transform_extent(env);
    constexpr std::size_t X = 4001;
    const auto s = envelope_samples(env);
    Table t;
    t.z.resize(X);
    t.density.resize(X);
    parallel_for(X, [&](std::size_t j) {
        const double xi = -xi_max + 2.0 * xi_max * static_cast<double>(j) / static_cast<double>(X - 1);
        t.z[j] = xi;
        t.density[j] = transform_density(s, xi);
    });
    return cache.emplace(key, std::move(t)).first->second;
}

Table position_table(const Envelope& env) {
    const double R = env.effective_radius();
    constexpr std::size_t X = 4001;
    Table t;
    double total = 0.0;
    for (std::size_t i = 0; i < X; ++i) {
        const double u = -R + 2.0 * R * static_cast<double>(i) / static_cast<double>(X - 1);
        const double v = env({u, 0.0}, 1);
        t.z.push_back(u);
        t.density.push_back(v * v);
        total += v * v;
    }
    const double h = 2.0 * R / static_cast<double>(X - 1);
    for (auto& d : t.density) d /= total * h;
    return t;
}

double mean_of_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return tree_sum(v) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
    std::sort(sq.begin(), sq.end());
    return std::sqrt(tree_sum(sq) / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

double momentum_spread(const RandomFamily& family, double eps, double sigmas) {
    // Bump transforms decay like exp(-sqrt(2 xi)); their tail needs a wider band.
    const double k = family.envelope.kind == EnvelopeKind::Gaussian ? sigmas : 24.0;
    return k * std::pow(eps, 1.0 - family.alpha) / family.envelope.radius;
}

double quantum_dist_moment(const Wavefunction& psi, const Potential& pot, double beta) {
    const auto& g = psi.grid;
    std::vector<double> terms(g.size(), 0.0);
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double a = std::norm(psi.values[j]);
        if (a == 0.0) continue;
        terms[j] = a / std::pow(pot.dist_to_singular_set(g.point(j)), beta);
    }
    return tree_sum(terms) * g.cell_volume();
}

double trapezoid(const std::vector<double>& v, double dt) {
    if (v.size() < 2) return 0.0;
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
    return s * dt;
}

}  // namespace

DensityKind density_kind_from_string(const std::string& s) {
    if (s == "uniform_box") return DensityKind::UniformBox;
    if (s == "truncated_gaussian") return DensityKind::TruncatedGaussian;
    if (s == "dirac") return DensityKind::Dirac;
    throw Error(ErrorKind::Config, "unknown label density '" + s + "'");
}

std::string to_string(DensityKind kind) {
    switch (kind) {
        case DensityKind::UniformBox: return "uniform_box";
        case DensityKind::TruncatedGaussian: return "truncated_gaussian";
        case DensityKind::Dirac: return "dirac";
    }
    return "?";
}

void LabelDensity::validate() const {
    require(box.n == 1 || box.n == 2, ErrorKind::InvalidArgument, "dimension must be 1 or 2");
    if (kind == DensityKind::Dirac) return;
    require(phase_volume(box) > 0.0, ErrorKind::InvalidArgument, "label box is empty");
    for (int d = 0; d < box.n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        require(box.x_hi[k] > box.x_lo[k] && box.p_hi[k] > box.p_lo[k], ErrorKind::InvalidArgument, "label box is empty");
    }
    if (kind == DensityKind::TruncatedGaussian) require(sigma > 0.0, ErrorKind::InvalidArgument, "sigma must be positive");
}

double LabelDensity::sup() const {
    switch (kind) {
        case DensityKind::UniformBox: return 1.0 / phase_volume(box);
        case DensityKind::Dirac: return std::numeric_limits<double>::infinity();
        case DensityKind::TruncatedGaussian: {
            double v = 1.0;
            for (int d = 0; d < box.n; ++d) {
                const auto k = static_cast<std::size_t>(d);
                for (auto [m, lo, hi] : {std::tuple{x_mean[k], box.x_lo[k], box.x_hi[k]}, std::tuple{p_mean[k], box.p_lo[k], box.p_hi[k]}}) {
                    const double mass = normal_cdf((hi - m) / sigma) - normal_cdf((lo - m) / sigma);
                    const double c = std::clamp(m, lo, hi);
                    v *= std::exp(-0.5 * (c - m) * (c - m) / (sigma * sigma)) / (std::sqrt(2.0 * kPi) * sigma * mass);
                }
            }
            return v;
        }
    }
    return 0.0;
}

void LabelDensity::sample(Rng& rng, Coord& x, Coord& p) const {
    x = x_mean;
    p = p_mean;
    if (kind == DensityKind::Dirac) return;
    for (int d = 0; d < box.n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        if (kind == DensityKind::UniformBox) {
            x[k] = rng.uniform(box.x_lo[k], box.x_hi[k]);
            p[k] = rng.uniform(box.p_lo[k], box.p_hi[k]);
        } else {
            x[k] = truncated_normal(rng, x_mean[k], sigma, box.x_lo[k], box.x_hi[k]);
            p[k] = truncated_normal(rng, p_mean[k], sigma, box.p_lo[k], box.p_hi[k]);
        }
    }
}

std::vector<std::pair<Coord, Coord>> sample_labels(const RandomFamily& family) {
    family.rho.validate();
    require(family.rho.box.n == family.n, ErrorKind::InvalidArgument, "label box and family dimensions differ");
    require(family.samples >= 1, ErrorKind::InvalidArgument, "family needs at least one sample");
    std::vector<std::pair<Coord, Coord>> out(family.samples);
    for (std::size_t i = 0; i < family.samples; ++i) {
        Rng rng(derive_seed(family.seed, i));
        family.rho.sample(rng, out[i].first, out[i].second);
    }
    return out;
}

double envelope_momentum_density(const Envelope& env, double xi) {
    return transform_density(envelope_samples(env), xi);
}

std::vector<double> envelope_momentum_quantiles(const Envelope& env, std::size_t count) {
    return quantiles(momentum_table(env), count);
}

std::vector<double> envelope_position_quantiles(const Envelope& env, std::size_t count) {
    return quantiles(position_table(env), count);
}

ParticleEnsemble limit_measure(const RandomFamily& family, const Coord& x0, const Coord& p0) {
    const int n = family.n;
    if (family.alpha > 0.0 && family.alpha < 1.0) return ParticleEnsemble::dirac(n, x0, p0);
    const std::size_t per = n == 1 ? family.cloud : static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(family.cloud))));
    require(per >= 1, ErrorKind::InvalidArgument, "limit cloud needs particles");
    const bool in_p = family.alpha == 1.0;
    const auto q = in_p ? envelope_momentum_quantiles(family.envelope, per) : envelope_position_quantiles(family.envelope, per);
    std::vector<Coord> xs, ps;
    for (std::size_t i = 0; i < per; ++i)
        for (std::size_t j = 0; j < (n == 2 ? per : 1); ++j) {
            Coord off{q[i], n == 2 ? q[j] : 0.0};
            Coord x = x0, p = p0;
            for (int d = 0; d < n; ++d) (in_p ? p : x)[static_cast<std::size_t>(d)] += off[static_cast<std::size_t>(d)];
            xs.push_back(x);
            ps.push_back(p);
        }
    return ParticleEnsemble::uniform(n, xs, ps);
}

std::vector<FamilySample> sample_family(const RandomFamily& family, const SpatialGrid& grid, double eps) {
    require(grid.dim() == family.n, ErrorKind::InvalidArgument, "grid and family dimensions differ");
    const auto labels = sample_labels(family);
    std::vector<FamilySample> out(labels.size());
    parallel_for(labels.size(), [&](std::size_t i) {
        const auto& [x0, p0] = labels[i];
        out[i].index = i;
        out[i].x0 = x0;
        out[i].p0 = p0;
        out[i].psi = wave_packet(grid, eps, family.alpha, x0, p0, family.envelope).psi;
        out[i].limit = limit_measure(family, x0, p0);
    });
    return out;
}

SpatialGrid grid_for_eps(int n, double lo, double hi, double eps, double p_extent, bool staggered,
                         std::size_t min_count, double band) {
    require(hi > lo && eps > 0.0 && p_extent > 0.0, ErrorKind::InvalidArgument, "invalid grid request");
    const double L = hi - lo;
    std::size_t N = 16;
    while (N < min_count || band * kPi * eps * static_cast<double>(N) / L < p_extent) {
        N *= 2;
        require(N <= (n == 1 ? (std::size_t{1} << 16) : (std::size_t{1} << 11)), ErrorKind::InvalidArgument,
                "grid needed for this eps and momentum reach is too large");
    }
    return staggered ? SpatialGrid::staggered(n, N, lo, hi) : SpatialGrid::cube(n, N, lo, hi);
}

FamilyEvolution evolve_family(const std::vector<FamilySample>& samples, const Potential& pot, double T,
                              std::size_t time_samples, const PropagatorConfig& config) {
    require(!samples.empty(), ErrorKind::InvalidArgument, "empty family");
    FamilyEvolution evo;
    evo.eps = samples.front().psi.eps;
    std::vector<std::vector<Wavefunction>> per(samples.size());
    std::vector<char> excluded(samples.size(), 0);
    parallel_for(samples.size(), [&](std::size_t i) {
        try {
            per[i] = propagate(samples[i].psi, pot, T, time_samples, config, true).states;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::TailOverflow) throw;
            excluded[i] = 1;
        }
    });
    for (std::size_t s = 0; s < time_samples; ++s) evo.times.push_back(T * static_cast<double>(s) / static_cast<double>(time_samples - 1));
    evo.states.resize(time_samples);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (excluded[i]) {
            evo.excluded.push_back(i);
            continue;
        }
        evo.kept.push_back(i);
        for (std::size_t s = 0; s < time_samples; ++s) evo.states[s].push_back(std::move(per[i][s]));
    }
    return evo;
}

std::vector<double> smoothed_density(const Wavefunction& psi, double delta) {
    const auto& g = psi.grid;
    std::vector<std::size_t> shape;
    for (const auto& a : g.axes()) shape.push_back(a.count);
    std::vector<cplx> data(psi.values.begin(), psi.values.end());
    fft_inplace(data, shape, FftDirection::Forward);
    const int n = g.dim();
    for (std::size_t j = 0; j < data.size(); ++j) {
        const auto idx = g.unflatten(j);
        double k2 = 0.0;
        for (int d = 0; d < n; ++d) {
            const auto& a = g.axis(d);
            const double k = 2.0 * kPi * static_cast<double>(signed_frequency(idx[static_cast<std::size_t>(d)], a.count)) / a.length();
            k2 += k * k;
        }
        data[j] *= std::exp(-0.25 * delta * k2);
    }
    fft_inplace(data, shape, FftDirection::Backward);
    std::vector<double> out(data.size());
    const double inv = 1.0 / static_cast<double>(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) out[j] = std::norm(data[j] * inv);
    return out;
}

OperatorReport operator_inequality_diagnostics(std::span<const Wavefunction> states, std::span<const double> lambdas,
                                               std::span<const PhasePoint> probes, const HusimiOptions& options) {
    require(!states.empty(), ErrorKind::InvalidArgument, "no states to average");
    const auto m = static_cast<double>(states.size());
    const int n = states.front().grid.dim();
    OperatorReport rep;
    rep.eps = states.front().eps;
    rep.samples = states.size();
    rep.lambdas.assign(lambdas.begin(), lambdas.end());
    for (double lambda : lambdas) {
        std::vector<double> acc(states.front().grid.size(), 0.0);
        for (const auto& psi : states) {
            const auto s = smoothed_density(psi, 2.0 * lambda * rep.eps * rep.eps);
            for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += s[j];
        }
        const double sup = *std::max_element(acc.begin(), acc.end()) / m;
        rep.smoothed_sup.push_back(sup);
        rep.implied_constant.push_back(sup * std::pow(lambda, 0.5 * n));
    }
    PhaseSpaceField sum, sum2;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto h = husimi(states[i], options);
        if (i == 0) {
            sum = h;
            sum2 = h;
            for (auto& v : sum2.values) v *= v;
            continue;
        }
        for (std::size_t j = 0; j < h.values.size(); ++j) {
            sum.values[j] += h.values[j];
            sum2.values[j] += h.values[j] * h.values[j];
        }
    }
    const auto best = static_cast<std::size_t>(std::max_element(sum.values.begin(), sum.values.end()) - sum.values.begin());
    rep.husimi_sup = sum.values[best] / m;
    if (states.size() > 1) {
        const double var = std::max(0.0, (sum2.values[best] / m - rep.husimi_sup * rep.husimi_sup) * m / (m - 1.0));
        rep.husimi_stderr = std::sqrt(var / m);
    }
    const std::size_t P = sum.p_size();
    rep.argmax_x = sum.x_node(best / P);
    rep.argmax_p = sum.p_node(best % P);
    for (const auto& z : probes) {
        std::vector<double> v(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) v[i] = husimi_at(states[i], z.x, z.p);
        rep.probe_values.push_back(tree_sum(v) / m);
    }
    return rep;
}

bool bounded_across_ladder(std::span<const double> values, double factor) {
    if (values.empty()) return true;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *lo > 0.0 && *hi <= factor * *lo;
}

NoConcentrationReport no_concentration_diagnostics(const FamilyEvolution& evo, std::span<const double> lambdas,
                                                   std::span<const PhasePoint> probes, const HusimiOptions& options) {
    require(evo.times.size() >= 1 && !evo.kept.empty(), ErrorKind::InvalidArgument, "empty evolution");
    NoConcentrationReport rep;
    const std::size_t last = evo.times.size() - 1;
    std::vector<std::size_t> picks{0, last / 2, last};
    picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    for (std::size_t s : picks) {
        rep.times.push_back(evo.times[s]);
        rep.per_time.push_back(operator_inequality_diagnostics(evo.states[s], lambdas, probes, options));
    }
    const auto& first = rep.per_time.front();
    rep.persists = true;
    for (const auto& r : rep.per_time)
        if (r.husimi_sup > 2.0 * first.husimi_sup + 3.0 * (r.husimi_stderr + first.husimi_stderr)) rep.persists = false;
    return rep;
}

TightnessReport tightness_diagnostics(const FamilyEvolution& evo, const Potential& pot, std::span<const double> radii,
                                      const TestDictionary& dict, const HusimiOptions& options) {
    require(!evo.kept.empty() && evo.times.size() >= 2, ErrorKind::InvalidArgument, "empty evolution");
    TightnessReport rep;
    rep.radii.assign(radii.begin(), radii.end());
    const std::size_t S = evo.times.size(), W = evo.kept.size(), R = radii.size(), K = dict.size();
    std::vector<double> tails(S * R, 0.0), ints(S * K, 0.0), energies(W, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<std::vector<double>> per_w(W);
        std::vector<std::vector<double>> tail_w(W, std::vector<double>(R, 0.0));
        parallel_for(W, [&](std::size_t w) {
            const auto& psi = evo.states[s][w];
            const auto& g = psi.grid;
            for (std::size_t j = 0; j < g.size(); ++j) {
                const Coord x = g.point(j);
                const double r = std::hypot(x[0], x[1]);
                const double a = std::norm(psi.values[j]) * g.cell_volume();
                for (std::size_t k = 0; k < R; ++k)
                    if (r > radii[k]) tail_w[w][k] += a;
            }
            per_w[w] = dictionary_integrals_husimi(dict, psi, options);
            if (s == 0) energies[w] = diagnostics(psi, pot).energy;
        });
        for (std::size_t k = 0; k < R; ++k) {
            std::vector<double> v(W);
            for (std::size_t w = 0; w < W; ++w) v[w] = tail_w[w][k];
            tails[s * R + k] = tree_sum(v) / static_cast<double>(W);
        }
        for (std::size_t k = 0; k < K; ++k) {
            std::vector<double> v(W);
            for (std::size_t w = 0; w < W; ++w) v[w] = per_w[w][k];
            ints[s * K + k] = tree_sum(v) / static_cast<double>(W);
        }
    }
    rep.mean_energy = tree_sum(energies) / static_cast<double>(W);
    const double T = evo.times.back() - evo.times.front();
    for (std::size_t k = 0; k < R; ++k) {
        rep.tail_initial.push_back(tails[k]);
        double sup = 0.0;
        for (std::size_t s = 0; s < S; ++s) sup = std::max(sup, tails[s * R + k]);
        rep.tail_sup.push_back(sup);
        if (T > 0.0) rep.fitted_c = std::max(rep.fitted_c, (sup - tails[k]) * radii[k] / (T * (1.0 + std::abs(rep.mean_energy))));
    }
    rep.tails_shrink = true;
    for (std::size_t k = 1; k < R; ++k)
        if (radii[k] > radii[k - 1] && rep.tail_sup[k] > rep.tail_sup[k - 1]) rep.tails_shrink = false;
    rep.variation_bounded = true;
    for (std::size_t k = 0; k < K; ++k) {
        double tv = 0.0;
        for (std::size_t s = 0; s + 1 < S; ++s) tv += std::abs(ints[(s + 1) * K + k] - ints[s * K + k]);
        rep.time_variation.push_back(tv);
        if (!std::isfinite(tv)) rep.variation_bounded = false;
    }
    return rep;
}

bool ConvergenceReport::decreasing() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (!(rows[i].D < rows[i - 1].D)) return false;
    return !rows.empty();
}

SpatialGrid experiment_grid(const RandomFamily& family, const ExperimentConfig& config, double eps) {
    const double p_extent = config.momentum_reach + momentum_spread(family, eps, config.spread_sigmas);
    const double grow = config.box_growth * std::sqrt(eps);
    return grid_for_eps(family.n, config.box_lo - grow, config.box_hi + grow, eps, p_extent, config.staggered, config.min_points,
                        config.grid_band);
}

ConvergenceReport run_convergence_experiment(const RandomFamily& family, const Potential& pot, double T,
                                             std::span<const double> eps_ladder, const ExperimentConfig& config) {
    require(pot.dim() == family.n, ErrorKind::InvalidArgument, "potential and family dimensions differ");
    require(config.time_samples >= 2, ErrorKind::InvalidArgument, "need at least two time samples");
    require(!eps_ladder.empty(), ErrorKind::InvalidArgument, "empty eps ladder");
    const int n = family.n;
    PhaseBox dbox;
    dbox.n = n;
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        dbox.x_lo[k] = config.box_lo;
        dbox.x_hi[k] = config.box_hi;
        dbox.p_lo[k] = -config.momentum_reach;
        dbox.p_hi[k] = config.momentum_reach;
    }
    ConvergenceReport rep;
    rep.dictionary = TestDictionary::build(dbox, config.dictionary_size, config.dictionary_seed, config.max_harmonic);
    rep.T = T;
    const auto& dict = rep.dictionary;
    const bool singular = pot.singular_enabled() && pot.softening() == 0.0;
    const std::size_t S = config.time_samples;
    const double tstep = T / static_cast<double>(S - 1);

    for (double eps : eps_ladder) {
        const auto grid = experiment_grid(family, config, eps);
        const auto samples = sample_family(family, grid, eps);
        const std::size_t W = samples.size();
        PropagatorConfig pcfg = config.propagator;
        if (pcfg.dt <= 0.0) {
            if (config.dt_eps_factor > 0.0) {
                double dx = 0.0;
                for (const auto& a : grid.axes()) dx = std::max(dx, a.spacing());
                pcfg.dt = std::min(config.dt_eps_factor * eps, dx * dx / (10.0 * eps) * 2.0 / kPi);
            } else {
                pcfg.dt = default_time_step(grid, eps, pot);
            }
        }

        std::vector<double> sup_d(W, 0.0), d0(W, 0.0), absorbed(W, 0.0), icl(W, 0.0), iq(W, 0.0);
        std::vector<char> excluded(W, 0);
        std::vector<std::vector<double>> dist(W);
        parallel_for(W, [&](std::size_t i) {
            const auto path = push_forward(samples[i].limit, pot, T, S, config.flow);
            std::vector<double> qmom(S, 0.0), d(S, 0.0);
            try {
                propagate(samples[i].psi, pot, T, S, pcfg, false, [&](std::size_t s, double, const Wavefunction& psi) {
                    const auto q = dictionary_integrals_husimi(dict, psi, config.husimi);
                    d[s] = d_P(dict, q, dictionary_integrals(dict, path.states[s]));
                    if (singular) qmom[s] = quantum_dist_moment(psi, pot, config.beta);
                });
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::TailOverflow) throw;
                excluded[i] = 1;
                return;
            }
            dist[i] = d;
            sup_d[i] = *std::max_element(d.begin(), d.end());
            d0[i] = d.front();
            absorbed[i] = path.absorbed_mass.back();
            if (singular) {
                icl[i] = dist_integrability(path, pot, config.integrability_radius, config.beta).value;
                iq[i] = trapezoid(qmom, tstep);
            }
        });

        std::vector<double> kept_d, kept_d0, kept_abs, kept_icl, kept_iq;
        std::size_t n_excl = 0;
        for (std::size_t i = 0; i < W; ++i) {
            if (excluded[i]) {
                ++n_excl;
                continue;
            }
            kept_d.push_back(sup_d[i]);
            kept_d0.push_back(d0[i]);
            kept_abs.push_back(absorbed[i]);
            kept_icl.push_back(icl[i]);
            kept_iq.push_back(iq[i]);
            for (std::size_t s = 0; s < S; ++s)
                rep.details.push_back(ConvergenceDetail{eps, i, s, tstep * static_cast<double>(s), dist[i][s]});
        }
        require(!kept_d.empty(), ErrorKind::TailOverflow, "every sample left the box");
        ConvergenceRow row;
        row.eps = eps;
        row.samples = kept_d.size();
        row.D = mean_of_sorted(kept_d);
        row.std_error = standard_error(kept_d, row.D);
        row.excluded_fraction = static_cast<double>(n_excl) / static_cast<double>(W);
        row.grid_points = grid.axis(0).count;
        row.dt = pcfg.dt;
        row.absorbed_mass = mean_of_sorted(kept_abs);
        row.integrability_classical = mean_of_sorted(kept_icl);
        row.integrability_quantum = mean_of_sorted(kept_iq);
        row.t0_distance = mean_of_sorted(kept_d0);
        rep.rows.push_back(row);
    }
    return rep;
}

namespace {

FILE* open_csv(const std::filesystem::path& path) {
    FILE* fp = std::fopen(path.string().c_str(), "w");
    require(fp != nullptr, ErrorKind::InvalidArgument, "cannot open " + path.string());
    return fp;
}

}  // namespace

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceReport& report) {
    FILE* fp = open_csv(path);
    std::fprintf(fp, "eps,D,stderr,excluded_fraction\n");
    for (const auto& r : report.rows) std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g\n", r.eps, r.D, r.std_error, r.excluded_fraction);
    std::fclose(fp);
}

void write_convergence_details_csv(const std::filesystem::path& path, const ConvergenceReport& report) {
    FILE* fp = open_csv(path);
    std::fprintf(fp, "eps,sample,time_index,t,d_P\n");
    for (const auto& d : report.details)
        std::fprintf(fp, "%.17g,%zu,%zu,%.17g,%.17g\n", d.eps, d.sample, d.time_index, d.t, d.distance);
    std::fclose(fp);
}

void write_convergence_diagnostics_csv(const std::filesystem::path& path, const ConvergenceReport& report) {
    FILE* fp = open_csv(path);
    std::fprintf(fp, "eps,samples,grid_points,dt,absorbed_mass,integrability_classical,integrability_quantum,t0_distance\n");
    for (const auto& r : report.rows)
        std::fprintf(fp, "%.17g,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.eps, r.samples, r.grid_points, r.dt, r.absorbed_mass,
                     r.integrability_classical, r.integrability_quantum, r.t0_distance);
    std::fclose(fp);
}

}  // namespace sclab

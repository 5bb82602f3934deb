#include "sclab/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sclab/error.hpp"

namespace sclab {

namespace {

std::vector<std::size_t> shape_of(const SpatialGrid& g) {
    std::vector<std::size_t> s;
    for (const auto& a : g.axes()) s.push_back(a.count);
    return s;
}

// |p|^2 at FFT-ordered flat index.
std::vector<double> momentum_squared(const SpatialGrid& g, double eps) {
    std::vector<double> p2(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t rem = i;
        double s = 0.0;
        for (int d = g.dim() - 1; d >= 0; --d) {
            const auto& a = g.axis(d);
            const double p = 2.0 * std::numbers::pi * eps * static_cast<double>(signed_frequency(rem % a.count, a.count)) / a.length();
            rem /= a.count;
            s += p * p;
        }
        p2[i] = s;
    }
    return p2;
}

std::vector<double> sample_potential(const SpatialGrid& g, const Potential& pot, bool singular_only) {
    std::vector<double> u(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const Coord x = g.point(j);
        u[j] = singular_only ? pot.singular_value(x) : pot.value(x);
    }
    return u;
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

double default_time_step(const SpatialGrid& grid, double eps, const Potential& pot) {
    double dx = grid.axis(0).spacing();
    for (const auto& a : grid.axes()) dx = std::min(dx, a.spacing());
    double dt = dx * dx / (10.0 * eps) * 2.0 / std::numbers::pi;
    const double umax = sup_abs(sample_potential(grid, pot, false));
    if (umax > 0.0) dt = std::min(dt, eps / (10.0 * umax));
    return dt;
}

StrangPropagator::StrangPropagator(const SpatialGrid& grid, double eps, const Potential& pot, double dt,
                                   const PropagatorConfig& config)
    : grid_(grid), eps_(eps), dt_(dt), config_(config), shape_(shape_of(grid)) {
    require(dt != 0.0 && std::isfinite(dt), ErrorKind::InvalidArgument, "time step must be finite and non-zero");
    require(pot.dim() == grid.dim(), ErrorKind::InvalidArgument, "potential and grid dimensions differ");
    require(config.tail_tolerance > 0.0 && config.tail_tolerance < 1.0, ErrorKind::InvalidArgument,
            "tail tolerance must lie in (0, 1)");
    require(config.nyquist_tolerance > 0.0 && config.nyquist_tolerance < 1.0, ErrorKind::InvalidArgument,
            "Nyquist tolerance must lie in (0, 1)");
    u_ = sample_potential(grid, pot, false);
    us_ = pot.singular_enabled() ? sample_potential(grid, pot, true) : std::vector<double>(grid.size(), 0.0);

    half_potential_phase_.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) half_potential_phase_[j] = std::polar(1.0, -0.5 * dt * u_[j] / eps);

    const auto p2 = momentum_squared(grid, eps);
    const double inv_n = 1.0 / static_cast<double>(grid.size());
    kinetic_phase_.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) kinetic_phase_[k] = std::polar(inv_n, -0.5 * dt * p2[k] / eps);

    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::size_t rem = i;
        bool outer = false;
        for (int d = grid.dim() - 1; d >= 0; --d) {
            const std::size_t n = shape_[static_cast<std::size_t>(d)];
            const long k = signed_frequency(rem % n, n);
            rem /= n;
            if (static_cast<double>(std::labs(k)) >= config.nyquist_band * static_cast<double>(n / 2)) outer = true;
        }
        if (outer) outer_band_.push_back(i);
    }
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto idx = grid.unflatten(j);
        bool edge = false;
        for (int d = 0; d < grid.dim(); ++d) {
            const auto n = grid.axis(d).count;
            const auto strip = static_cast<std::size_t>(std::ceil(config.boundary_fraction * static_cast<double>(n)));
            const auto i = idx[static_cast<std::size_t>(d)];
            if (i < strip || i >= n - strip) edge = true;
        }
        if (edge) boundary_strip_.push_back(j);
    }
}

void StrangPropagator::check_guards(double boundary, double spectral_outer) const {
    if (spectral_outer > config_.nyquist_tolerance) {
        std::ostringstream os;
        os << "spectral mass " << spectral_outer << " in the outer momentum band exceeds " << config_.nyquist_tolerance;
        throw Error(ErrorKind::NyquistViolation, os.str());
    }
    if (boundary > config_.tail_tolerance) {
        std::ostringstream os;
        os << "mass " << boundary << " near the box boundary exceeds " << config_.tail_tolerance;
        throw Error(ErrorKind::TailOverflow, os.str());
    }
}

void StrangPropagator::step(Wavefunction& psi) const {
    require(psi.grid == grid_ && psi.eps == eps_, ErrorKind::InvalidArgument, "propagator built for another grid or eps");
    auto& v = psi.values;
    double total = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] *= half_potential_phase_[j];
        total += std::norm(v[j]);
    }
    fft_inplace(v, shape_, FftDirection::Forward);
    double outer = 0.0;
    for (auto k : outer_band_) outer += std::norm(v[k]);
    const double spectral_outer = total > 0.0 ? outer / (total * static_cast<double>(v.size())) : 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= kinetic_phase_[k];
    fft_inplace(v, shape_, FftDirection::Backward);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] *= half_potential_phase_[j];
    double boundary = 0.0;
    for (auto j : boundary_strip_) boundary += std::norm(v[j]);
    check_guards(boundary * grid_.cell_volume(), spectral_outer);
}

Wavefunction step(const Wavefunction& psi, const Potential& pot, const PropagatorConfig& config) {
    const double dt = config.dt != 0.0 ? config.dt : default_time_step(psi.grid, psi.eps, pot);
    StrangPropagator prop(psi.grid, psi.eps, pot, dt, config);
    Wavefunction out = psi;
    prop.step(out);
    return out;
}

Wavefunction spectral_derivative(const Wavefunction& psi, int axis) {
    const auto& g = psi.grid;
    const auto shape = shape_of(g);
    std::vector<cplx> v = psi.values;
    fft_inplace(v, shape, FftDirection::Forward);
    const double inv_n = 1.0 / static_cast<double>(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t rem = i;
        double kx = 0.0;
        for (int d = g.dim() - 1; d >= 0; --d) {
            const auto& a = g.axis(d);
            const long k = signed_frequency(rem % a.count, a.count);
            rem /= a.count;
            // The Nyquist mode has no symmetric partner; drop it from derivatives.
            if (d == axis) kx = (2 * std::labs(k) == static_cast<long>(a.count)) ? 0.0 : 2.0 * std::numbers::pi * static_cast<double>(k) / a.length();
        }
        v[i] *= cplx(0.0, kx * inv_n);
    }
    fft_inplace(v, shape, FftDirection::Backward);
    return Wavefunction(g, psi.eps, std::move(v));
}

Wavefunction apply_hamiltonian(const Wavefunction& psi, const Potential& pot) {
    const auto& g = psi.grid;
    const auto shape = shape_of(g);
    std::vector<cplx> v = psi.values;
    fft_inplace(v, shape, FftDirection::Forward);
    const auto p2 = momentum_squared(g, psi.eps);
    const double inv_n = 1.0 / static_cast<double>(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= 0.5 * p2[k] * inv_n;
    fft_inplace(v, shape, FftDirection::Backward);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += pot.value(g.point(j)) * psi.values[j];
    return Wavefunction(g, psi.eps, std::move(v));
}

QuantumDiagnostics diagnostics(const Wavefunction& psi, const Potential& pot, const PropagatorConfig& config) {
    const auto& g = psi.grid;
    const double vol = g.cell_volume();
    QuantumDiagnostics d;
    d.mass = psi.norm_squared();

    const auto shape = shape_of(g);
    std::vector<cplx> hat = psi.values;
    fft_inplace(hat, shape, FftDirection::Forward);
    const auto p2 = momentum_squared(g, psi.eps);
    double kin = 0.0;
    for (std::size_t k = 0; k < hat.size(); ++k) kin += 0.5 * p2[k] * std::norm(hat[k]);
    kin *= vol / static_cast<double>(g.size());

    double pot_energy = 0.0, cm = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const Coord x = g.point(j);
        const double r = std::norm(psi.values[j]);
        pot_energy += pot.value(x) * r;
        if (pot.singular_enabled()) {
            const double us = pot.singular_value(x);
            cm += us * us * r;
        }
    }
    d.energy = kin + pot_energy * vol;
    d.coulomb_moment = cm * vol;
    d.h_norm2 = apply_hamiltonian(psi, pot).norm_squared();
    for (double r : config.tail_radii) d.tail.push_back(tail_mass(psi, r));
    d.boundary = boundary_mass(psi, config.boundary_fraction);
    d.spectral_outer = spectral_band_mass(psi, config.nyquist_band);
    return d;
}

double coulomb_moment_budget(const QuantumDiagnostics& initial, const Potential& pot) {
    const double sb = pot.bounded().sup_bound(pot.dim());
    return initial.h_norm2 + 2.0 * sb * (initial.energy + sb);
}

Trajectory propagate(const Wavefunction& psi0, const Potential& pot, double T, std::size_t samples,
                     const PropagatorConfig& config, bool keep_states, const SampleCallback& callback) {
    require(samples >= 2, ErrorKind::InvalidArgument, "need at least two sample times");
    require(T > 0.0, ErrorKind::InvalidArgument, "final time must be positive");
    const double dt_max = config.dt != 0.0 ? std::abs(config.dt) : default_time_step(psi0.grid, psi0.eps, pot);
    const double interval = T / static_cast<double>(samples - 1);
    const auto per_interval = static_cast<std::size_t>(std::ceil(interval / dt_max - 1e-9));
    const double dt = interval / static_cast<double>(per_interval);
    StrangPropagator prop(psi0.grid, psi0.eps, pot, dt, config);

    Trajectory traj;
    traj.dt = dt;
    Wavefunction psi = psi0;
    auto record = [&](std::size_t i, double t) {
        auto d = diagnostics(psi, pot, config);
        d.t = t;
        traj.times.push_back(t);
        traj.diagnostics.push_back(std::move(d));
        if (keep_states) traj.states.push_back(psi);
        if (callback) callback(i, t, psi);
    };
    record(0, 0.0);
    for (std::size_t s = 1; s < samples; ++s) {
        for (std::size_t k = 0; k < per_interval; ++k) prop.step(psi);
        traj.steps += per_interval;
        record(s, interval * static_cast<double>(s));
    }
    return traj;
}

}  // namespace sclab

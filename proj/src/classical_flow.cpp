#include "sclab/classical_flow.hpp"

#include <cmath>
#include <cstdio>

#include "sclab/error.hpp"
#include "sclab/parallel.hpp"

namespace sclab {

double ParticleEnsemble::total_weight() const {
    std::vector<double> w(particles.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = particles[i].weight;
    return tree_sum(w);
}

double ParticleEnsemble::absorbed_weight() const {
    std::vector<double> w(particles.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (particles[i].absorbed) w[i] = particles[i].weight;
    return tree_sum(w);
}

void ParticleEnsemble::validate() const {
    require(n == 1 || n == 2, ErrorKind::InvalidArgument, "dimension must be 1 or 2");
    require(!particles.empty(), ErrorKind::InvalidArgument, "empty ensemble");
    for (const auto& q : particles) require(q.weight >= 0.0, ErrorKind::InvalidArgument, "negative particle weight");
    require(std::abs(total_weight() - 1.0) <= 1e-12, ErrorKind::InvalidArgument, "ensemble weights must sum to 1");
}

ParticleEnsemble ParticleEnsemble::dirac(int n, const Coord& x, const Coord& p) {
    ParticleEnsemble e;
    e.n = n;
    e.particles.push_back(Particle{x, p, 1.0, false});
    return e;
}

ParticleEnsemble ParticleEnsemble::uniform(int n, std::span<const Coord> xs, std::span<const Coord> ps) {
    require(xs.size() == ps.size() && !xs.empty(), ErrorKind::InvalidArgument, "need matching nonempty position and momentum lists");
    ParticleEnsemble e;
    e.n = n;
    const double w = 1.0 / static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) e.particles.push_back(Particle{xs[i], ps[i], w, false});
    return e;
}

ParticleEnsemble mix(const ParticleEnsemble& a, const ParticleEnsemble& b, double alpha) {
    require(a.n == b.n, ErrorKind::InvalidArgument, "ensembles live in different dimensions");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::InvalidArgument, "mixing weight must lie in [0, 1]");
    ParticleEnsemble m;
    m.n = a.n;
    for (auto q : a.particles) {
        q.weight *= alpha;
        m.particles.push_back(q);
    }
    for (auto q : b.particles) {
        q.weight *= 1.0 - alpha;
        m.particles.push_back(q);
    }
    return m;
}

void FlowConfig::validate() const {
    require(h > 0.0, ErrorKind::InvalidArgument, "flow step must be positive");
    require(r_guard > 0.0, ErrorKind::InvalidArgument, "guard radius must be positive");
    require(beta > 1.0, ErrorKind::InvalidArgument, "beta must exceed 1");
    require(cutoff_step_factor > 0.0 && cutoff_step_factor <= 1.0, ErrorKind::InvalidArgument,
            "cutoff step factor must lie in (0, 1]");
}

double FlowConfig::local_step(double dist, double energy) const {
    const double r_ref = 10.0 * r_guard;
    double s = h;
    if (dist < r_ref) s *= (dist / r_ref) * (dist / r_ref);
    if (energy > energy_cutoff) s *= cutoff_step_factor;
    return s;
}

PhasePoint verlet_step(const PhasePoint& z, const Potential& pot, int n, double dt) {
    PhasePoint out = z;
    const Coord g0 = pot.gradient(z.x);
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        out.p[k] -= 0.5 * dt * g0[k];
        out.x[k] += dt * out.p[k];
    }
    const Coord g1 = pot.gradient(out.x);
    for (int d = 0; d < n; ++d) out.p[static_cast<std::size_t>(d)] -= 0.5 * dt * g1[static_cast<std::size_t>(d)];
    return out;
}

FlowTrajectory flow_map(const Coord& x, const Coord& p, const Potential& pot, double T, std::size_t samples,
                        const FlowConfig& config) {
    config.validate();
    require(samples >= 2 && T >= 0.0, ErrorKind::InvalidArgument, "need T >= 0 and at least two samples");
    const int n = pot.dim();
    const EnergyFunction energy(pot);
    FlowTrajectory tr;
    PhasePoint z{x, p};
    double t = 0.0;
    const bool singular = pot.singular_enabled() && pot.softening() == 0.0;
    if (singular && pot.dist_to_singular_set(x) < config.r_guard) {
        tr.absorbed = true;
        tr.absorbed_at = 0.0;
    }
    for (std::size_t s = 0; s < samples; ++s) {
        const double target = T * static_cast<double>(s) / static_cast<double>(samples - 1);
        while (!tr.absorbed && t < target) {
            const double dist = singular ? pot.dist_to_singular_set(z.x) : std::numeric_limits<double>::infinity();
            const double e = std::isfinite(config.energy_cutoff) ? energy(z.x, z.p) : 0.0;
            double dt = config.local_step(dist, e);
            // Land exactly on the sample time; absorb a roundoff-sized remainder.
            if (t + dt >= target || target - (t + dt) < 1e-12 * std::max(1.0, target)) dt = target - t;
            z = verlet_step(z, pot, n, dt);
            t = (dt == target - t) ? target : t + dt;
            if (++tr.steps > config.max_steps) throw Error(ErrorKind::InvalidArgument, "flow step budget exhausted");
            if (singular && pot.dist_to_singular_set(z.x) < config.r_guard) {
                tr.absorbed = true;
                tr.absorbed_at = t;
            }
        }
        tr.times.push_back(target);
        tr.points.push_back(z);
    }
    return tr;
}

MeasurePath push_forward(const ParticleEnsemble& mu, const Potential& pot, double T, std::size_t samples,
                         const FlowConfig& config) {
    require(mu.n == pot.dim(), ErrorKind::InvalidArgument, "ensemble and potential dimensions differ");
    const std::size_t P = mu.size();
    std::vector<FlowTrajectory> trs(P);
    parallel_for(P, [&](std::size_t i) {
        const auto& q = mu.particles[i];
        if (q.absorbed) {
            // Already absorbed particles stay where they are.
            FlowTrajectory tr;
            tr.absorbed = true;
            tr.absorbed_at = 0.0;
            for (std::size_t s = 0; s < samples; ++s) {
                tr.times.push_back(T * static_cast<double>(s) / static_cast<double>(samples - 1));
                tr.points.push_back(PhasePoint{q.x, q.p});
            }
            trs[i] = std::move(tr);
            return;
        }
        trs[i] = flow_map(q.x, q.p, pot, T, samples, config);
    });
    MeasurePath path;
    for (std::size_t s = 0; s < samples; ++s) {
        path.times.push_back(T * static_cast<double>(s) / static_cast<double>(samples - 1));
        ParticleEnsemble e;
        e.n = mu.n;
        e.particles.resize(P);
        for (std::size_t i = 0; i < P; ++i) {
            const auto& tr = trs[i];
            e.particles[i] = Particle{tr.points[s].x, tr.points[s].p, mu.particles[i].weight, tr.absorbed && tr.absorbed_at <= path.times[s]};
        }
        path.absorbed_mass.push_back(e.absorbed_weight());
        path.states.push_back(std::move(e));
    }
    return path;
}

double liouville_residual(const MeasurePath& path, const Potential& pot, const TestFunction& phi,
                          const TimeWindow& window, double tube) {
    require(path.times.size() >= 3, ErrorKind::InvalidArgument, "need at least three samples");
    if (pot.singular_enabled() && phi.x_support_distance_to_singular_set(pot) <= tube)
        throw Error(ErrorKind::SupportViolation, "test function support meets the tube around the singular set");
    const int n = phi.n;
    const std::size_t S = path.times.size();
    const double dt = (path.times.back() - path.times.front()) / static_cast<double>(S - 1);
    std::vector<double> a(S), b(S);
    for (std::size_t s = 0; s < S; ++s) {
        const auto& e = path.states[s];
        std::vector<double> ta(e.size(), 0.0), tb(e.size(), 0.0);
        for (std::size_t i = 0; i < e.size(); ++i) {
            const auto& q = e.particles[i];
            if (q.absorbed || q.weight == 0.0) continue;
            const double f = phi(q.x, q.p);
            if (f == 0.0) continue;
            ta[i] = q.weight * f;
            const Coord gx = phi.grad_x(q.x, q.p), gp = phi.grad_p(q.x, q.p);
            const Coord gu = pot.gradient(q.x);
            double adv = 0.0;
            for (int d = 0; d < n; ++d) {
                const auto k = static_cast<std::size_t>(d);
                adv += q.p[k] * gx[k] - gu[k] * gp[k];
            }
            tb[i] = q.weight * adv;
        }
        a[s] = tree_sum(ta);
        b[s] = tree_sum(tb);
    }
    double sum = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const double w = (s == 0 || s + 1 == S) ? 0.5 * dt : dt;
        const double t = path.times[s] - path.times.front();
        sum += w * (window.derivative(t) * a[s] + window.value(t) * b[s]);
    }
    return std::abs(sum);
}

IntegrabilityReport dist_integrability(const MeasurePath& path, const Potential& pot, double R, double beta,
                                       std::span<const double> deltas) {
    require(pot.singular_enabled(), ErrorKind::InvalidArgument, "potential has no singular part");
    require(path.times.size() >= 2, ErrorKind::InvalidArgument, "need at least two samples");
    IntegrabilityReport rep;
    rep.deltas.assign(deltas.begin(), deltas.end());
    const std::size_t S = path.times.size(), D = deltas.size();
    const double dt = (path.times.back() - path.times.front()) / static_cast<double>(S - 1);
    std::vector<double> plain(S), reg(S * D);
    for (std::size_t s = 0; s < S; ++s) {
        const auto& e = path.states[s];
        std::vector<double> t0(e.size(), 0.0);
        std::vector<std::vector<double>> td(D, std::vector<double>(e.size(), 0.0));
        for (std::size_t i = 0; i < e.size(); ++i) {
            const auto& q = e.particles[i];
            if (q.absorbed) continue;
            const double r2 = q.x[0] * q.x[0] + q.x[1] * q.x[1] + q.p[0] * q.p[0] + q.p[1] * q.p[1];
            if (r2 > R * R) continue;
            const double db = std::pow(pot.dist_to_singular_set(q.x), beta);
            t0[i] = q.weight / db;
            for (std::size_t k = 0; k < D; ++k) td[k][i] = q.weight / (db + deltas[k]);
        }
        plain[s] = tree_sum(t0);
        for (std::size_t k = 0; k < D; ++k) reg[s * D + k] = tree_sum(td[k]);
        rep.excluded_mass = std::max(rep.excluded_mass, e.absorbed_weight());
    }
    rep.regularized.assign(D, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const double w = (s == 0 || s + 1 == S) ? 0.5 * dt : dt;
        rep.value += w * plain[s];
        for (std::size_t k = 0; k < D; ++k) rep.regularized[k] += w * reg[s * D + k];
    }
    return rep;
}

void write_ensemble_csv(const std::filesystem::path& path, const ParticleEnsemble& mu) {
    FILE* fp = std::fopen(path.string().c_str(), "w");
    require(fp != nullptr, ErrorKind::InvalidArgument, "cannot open " + path.string());
    std::fprintf(fp, mu.n == 1 ? "id,x,p,weight,flag\n" : "id,x1,x2,p1,p2,weight,flag\n");
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto& q = mu.particles[i];
        if (mu.n == 1)
            std::fprintf(fp, "%zu,%.17g,%.17g,%.17g,%d\n", i, q.x[0], q.p[0], q.weight, q.absorbed ? 1 : 0);
        else
            std::fprintf(fp, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", i, q.x[0], q.x[1], q.p[0], q.p[1], q.weight, q.absorbed ? 1 : 0);
    }
    std::fclose(fp);
}

void write_measure_path(const std::filesystem::path& dir, const MeasurePath& path) {
    std::filesystem::create_directories(dir);
    FILE* fp = std::fopen((dir / "index.csv").string().c_str(), "w");
    require(fp != nullptr, ErrorKind::InvalidArgument, "cannot write the measure-path index in " + dir.string());
    std::fprintf(fp, "sample,t,file,absorbed_mass\n");
    for (std::size_t s = 0; s < path.times.size(); ++s) {
        char name[64];
        std::snprintf(name, sizeof name, "ensemble_%05zu.csv", s);
        write_ensemble_csv(dir / name, path.states[s]);
        std::fprintf(fp, "%zu,%.17g,%s,%.17g\n", s, path.times[s], name, path.absorbed_mass[s]);
    }
    std::fclose(fp);
}

}  // namespace sclab

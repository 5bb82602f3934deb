#include "sclab/measure_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sclab/error.hpp"
#include "sclab/parallel.hpp"
#include "sclab/rng.hpp"

namespace sclab {

namespace {

void require_ensemble_normalized(const ParticleEnsemble& mu) {
    require(std::abs(mu.total_weight() - 1.0) <= 1e-12, ErrorKind::NotNormalized, "ensemble weights do not sum to 1");
}

void require_field_normalized(const PhaseSpaceField& f, double tol) {
    require(std::abs(f.total() - 1.0) <= tol, ErrorKind::NotNormalized, "phase-space field does not integrate to 1");
}

// Per-member factor tables on the nodes of each axis of a field.
std::vector<std::vector<double>> axis_table(const DictionaryMember& m, const std::vector<Axis>& axes, std::size_t offset) {
    std::vector<std::vector<double>> t(axes.size());
    for (std::size_t d = 0; d < axes.size(); ++d)
        for (std::size_t i = 0; i < axes[d].count; ++i) t[d].push_back(m.factor(offset + d, axes[d].node(i)));
    return t;
}

// Values of the separable product at every flat index of `axes`.
std::vector<double> flat_product(const std::vector<std::vector<double>>& t, const std::vector<Axis>& axes) {
    const std::size_t total = axes_size(axes);
    std::vector<double> v(total);
    if (axes.size() == 1) return t[0];
    for (std::size_t i = 0; i < axes[0].count; ++i)
        for (std::size_t j = 0; j < axes[1].count; ++j) v[i * axes[1].count + j] = t[0][i] * t[1][j];
    return v;
}

}  // namespace

double DictionaryMember::factor(std::size_t d, double z) const {
    const double u = (z - centre[d]) / width[d];
    return std::exp(-0.5 * u * u) * std::cos(frequency[d] * z + phase[d]);
}

double DictionaryMember::operator()(const Coord& x, const Coord& p, int n) const {
    double v = 1.0;
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        v *= factor(k, x[k]) * factor(static_cast<std::size_t>(n) + k, p[k]);
    }
    return v;
}

TestDictionary TestDictionary::build(const PhaseBox& box, std::size_t K, std::uint64_t seed, int max_harmonic) {
    require(box.n == 1 || box.n == 2, ErrorKind::InvalidArgument, "dimension must be 1 or 2");
    require(K >= 1, ErrorKind::InvalidArgument, "dictionary needs at least one member");
    TestDictionary dict;
    dict.n = box.n;
    dict.seed = seed;
    dict.box = box;
    Rng rng(derive_seed(seed, 0x6469637469ULL));
    const auto n = static_cast<std::size_t>(box.n);
    for (std::size_t k = 0; k < K; ++k) {
        DictionaryMember m;
        double lip2 = 0.0;
        for (std::size_t d = 0; d < 2 * n; ++d) {
            const bool is_x = d < n;
            const double lo = is_x ? box.x_lo[d] : box.p_lo[d - n];
            const double hi = is_x ? box.x_hi[d] : box.p_hi[d - n];
            require(hi > lo, ErrorKind::InvalidArgument, "empty dictionary box");
            const double half = 0.5 * (hi - lo);
            m.centre.push_back(0.5 * (lo + hi));
            m.width.push_back(1.5 * half);
            const int h = k == 0 ? 0 : rng.integer(0, max_harmonic);
            m.frequency.push_back(h * std::numbers::pi / (3.0 * half));
            m.phase.push_back(k == 0 ? 0.0 : rng.uniform(0.0, 2.0 * std::numbers::pi));
            // |d/dz (e cos)| <= sup|e'| + w = 1/(s sqrt(e)) + w.
            const double l = 1.0 / (m.width.back() * std::sqrt(std::numbers::e)) + m.frequency.back();
            lip2 += l * l;
        }
        m.lipschitz = std::sqrt(lip2);
        dict.members.push_back(std::move(m));
    }
    return dict;
}

double TestDictionary::weight(std::size_t k) const { return std::ldexp(1.0, -static_cast<int>(k + 1)); }

double TestDictionary::lipschitz_sum() const {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k) s += weight(k) * members[k].lipschitz;
    return s;
}

TestDictionary::Verification TestDictionary::verify(std::size_t per_axis) const {
    const auto dims = static_cast<std::size_t>(2 * n);
    std::size_t total = 1;
    for (std::size_t d = 0; d < dims; ++d) total *= per_axis;
    auto node = [&](std::size_t flat, Coord& x, Coord& p) {
        for (std::size_t d = dims; d-- > 0;) {
            const std::size_t i = flat % per_axis;
            flat /= per_axis;
            const bool is_x = d < static_cast<std::size_t>(n);
            const std::size_t a = is_x ? d : d - static_cast<std::size_t>(n);
            const double lo = is_x ? box.x_lo[a] : box.p_lo[a], hi = is_x ? box.x_hi[a] : box.p_hi[a];
            // Lattice over the box widened by half its size on each side.
            const double w = hi - lo;
            const double z = lo - 0.5 * w + 2.0 * w * static_cast<double>(i) / static_cast<double>(per_axis - 1);
            (is_x ? x : p)[a] = z;
        }
    };
    Verification v;
    std::vector<Coord> xs(total), ps(total);
    for (std::size_t f = 0; f < total; ++f) node(f, xs[f], ps[f]);
    for (const auto& m : members) {
        std::vector<double> vals(total);
        for (std::size_t f = 0; f < total; ++f) {
            vals[f] = m(xs[f], ps[f], n);
            v.max_abs = std::max(v.max_abs, std::abs(vals[f]));
        }
        // Lipschitz ratios between lattice neighbours along each coordinate.
        std::size_t stride = 1;
        for (std::size_t d = dims; d-- > 0; stride *= per_axis)
            for (std::size_t f = 0; f < total; ++f) {
                if ((f / stride) % per_axis + 1 == per_axis) continue;
                const std::size_t g = f + stride;
                double dist2 = 0.0;
                for (int e = 0; e < n; ++e) {
                    const auto k = static_cast<std::size_t>(e);
                    dist2 += (xs[f][k] - xs[g][k]) * (xs[f][k] - xs[g][k]) + (ps[f][k] - ps[g][k]) * (ps[f][k] - ps[g][k]);
                }
                v.max_lipschitz_ratio = std::max(v.max_lipschitz_ratio, std::abs(vals[f] - vals[g]) / std::sqrt(dist2) / m.lipschitz);
            }
    }
    return v;
}

std::string TestDictionary::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "dictionary_seed = " << seed << "\n";
    os << "dictionary_K = " << size() << "\n";
    for (std::size_t k = 0; k < size(); ++k) {
        os << "dictionary_f" << k << " = ";
        for (std::size_t d = 0; d < members[k].frequency.size(); ++d)
            os << (d ? " " : "") << members[k].frequency[d] << "@" << members[k].phase[d];
        os << "\n";
    }
    return os.str();
}

std::vector<double> dictionary_integrals(const TestDictionary& dict, const ParticleEnsemble& mu) {
    require(dict.n == mu.n, ErrorKind::InvalidArgument, "dictionary and ensemble dimensions differ");
    std::vector<double> out(dict.size());
    parallel_for(dict.size(), [&](std::size_t k) {
        std::vector<double> terms(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const auto& q = mu.particles[i];
            terms[i] = q.weight * dict.members[k](q.x, q.p, mu.n);
        }
        out[k] = tree_sum(terms);
    });
    return out;
}

std::vector<double> dictionary_integrals(const TestDictionary& dict, const PhaseSpaceField& field) {
    require(dict.n == field.dim(), ErrorKind::InvalidArgument, "dictionary and field dimensions differ");
    const std::size_t X = field.x_size(), P = field.p_size();
    const double cell = field.cell_volume();
    std::vector<double> out(dict.size());
    parallel_for(dict.size(), [&](std::size_t k) {
        const auto& m = dict.members[k];
        const auto a = flat_product(axis_table(m, field.x_axes, 0), field.x_axes);
        const auto b = flat_product(axis_table(m, field.p_axes, static_cast<std::size_t>(dict.n)), field.p_axes);
        std::vector<double> rows(X);
        for (std::size_t i = 0; i < X; ++i) {
            double s = 0.0;
            for (std::size_t q = 0; q < P; ++q) s += b[q] * field.values[i * P + q];
            rows[i] = a[i] * s;
        }
        out[k] = tree_sum(rows) * cell;
    });
    return out;
}

std::vector<double> dictionary_integrals_husimi(const TestDictionary& dict, const Wavefunction& psi,
                                                const HusimiOptions& options) {
    const auto layout = husimi_layout(psi.grid, psi.eps, options);
    const std::size_t K = dict.size(), Y = axes_size(layout.y_axes), P = axes_size(layout.p_axes);
    std::vector<std::vector<double>> a(K), b(K);
    for (std::size_t k = 0; k < K; ++k) {
        a[k] = flat_product(axis_table(dict.members[k], layout.y_axes, 0), layout.y_axes);
        b[k] = flat_product(axis_table(dict.members[k], layout.p_axes, static_cast<std::size_t>(dict.n)), layout.p_axes);
    }
    std::vector<double> per_row(Y * K, 0.0);
    husimi_rows(psi, layout, options.skip_below, [&](std::size_t y, std::span<const double> row) {
        if (row.empty()) return;
        for (std::size_t k = 0; k < K; ++k) {
            double s = 0.0;
            for (std::size_t q = 0; q < P; ++q) s += b[k][q] * row[q];
            per_row[y * K + k] = a[k][y] * s;
        }
    });
    double cell = 1.0;
    for (const auto& ax : layout.y_axes) cell *= ax.spacing();
    for (const auto& ax : layout.p_axes) cell *= ax.spacing();
    std::vector<double> out(K);
    std::vector<double> col(Y);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t y = 0; y < Y; ++y) col[y] = per_row[y * K + k];
        out[k] = tree_sum(col) * cell;
    }
    return out;
}

double d_P(const TestDictionary& dict, std::span<const double> a, std::span<const double> b) {
    require(a.size() == dict.size() && b.size() == dict.size(), ErrorKind::InvalidArgument, "integral vectors do not match the dictionary");
    double s = 0.0;
    for (std::size_t k = 0; k < dict.size(); ++k) s += dict.weight(k) * std::abs(a[k] - b[k]);
    return s;
}

double d_P(const TestDictionary& dict, const ParticleEnsemble& mu, const ParticleEnsemble& nu) {
    require_ensemble_normalized(mu);
    require_ensemble_normalized(nu);
    return d_P(dict, dictionary_integrals(dict, mu), dictionary_integrals(dict, nu));
}

double d_P(const TestDictionary& dict, const PhaseSpaceField& mu, const PhaseSpaceField& nu, double field_tolerance) {
    require_field_normalized(mu, field_tolerance);
    require_field_normalized(nu, field_tolerance);
    return d_P(dict, dictionary_integrals(dict, mu), dictionary_integrals(dict, nu));
}

double d_P(const TestDictionary& dict, const PhaseSpaceField& mu, const ParticleEnsemble& nu, double field_tolerance) {
    require_field_normalized(mu, field_tolerance);
    require_ensemble_normalized(nu);
    return d_P(dict, dictionary_integrals(dict, mu), dictionary_integrals(dict, nu));
}

ParticleEnsemble expectation_measure(std::span<const ParticleEnsemble> samples, std::span<const double> probabilities) {
    require(!samples.empty() && samples.size() == probabilities.size(), ErrorKind::InvalidArgument,
            "need one probability per ensemble");
    double total = 0.0;
    for (double p : probabilities) {
        require(p >= 0.0, ErrorKind::InvalidArgument, "negative probability");
        total += p;
    }
    require(total > 0.0, ErrorKind::InvalidArgument, "probabilities sum to zero");
    ParticleEnsemble e;
    e.n = samples.front().n;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        require(samples[s].n == e.n, ErrorKind::InvalidArgument, "ensembles live in different dimensions");
        for (auto q : samples[s].particles) {
            q.weight *= probabilities[s] / total;
            e.particles.push_back(q);
        }
    }
    return e;
}

RegularityReport regularity_check(const ParticleEnsemble& mu, double bound, double kernel_width, double tolerance) {
    require(kernel_width > 0.0, ErrorKind::InvalidArgument, "kernel width must be positive");
    require(!mu.particles.empty(), ErrorKind::InvalidArgument, "empty ensemble");
    const int n = mu.n;
    const double h = kernel_width;
    Coord lo{0.0, 0.0}, hi{0.0, 0.0};
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        lo[k] = hi[k] = mu.particles.front().x[k];
        for (const auto& q : mu.particles) {
            lo[k] = std::min(lo[k], q.x[k]);
            hi[k] = std::max(hi[k], q.x[k]);
        }
    }
    const double step = 0.5 * h;
    std::array<std::size_t, 2> count{1, 1};
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        count[k] = static_cast<std::size_t>(std::ceil((hi[k] - lo[k]) / step)) + 1;
    }
    const double norm = std::pow(2.0 * std::numbers::pi * h * h, -0.5 * n);
    const std::size_t total = count[0] * count[1];
    std::vector<double> dens(total);
    parallel_for(total, [&](std::size_t f) {
        const Coord z{lo[0] + step * static_cast<double>(f / count[1]), n == 2 ? lo[1] + step * static_cast<double>(f % count[1]) : 0.0};
        double s = 0.0;
        for (const auto& q : mu.particles) {
            double r2 = 0.0;
            for (int d = 0; d < n; ++d) {
                const auto k = static_cast<std::size_t>(d);
                r2 += (q.x[k] - z[k]) * (q.x[k] - z[k]);
            }
            if (r2 < 64.0 * h * h) s += q.weight * std::exp(-0.5 * r2 / (h * h));
        }
        dens[f] = s * norm;
    });
    RegularityReport rep;
    rep.max_density = *std::max_element(dens.begin(), dens.end());
    rep.bound = bound;
    rep.kernel_width = h;
    rep.tolerance = tolerance;
    rep.regular = rep.max_density <= bound * (1.0 + tolerance);
    return rep;
}

}  // namespace sclab

#include "sclab/error_terms.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "sclab/error.hpp"
#include "sclab/fft.hpp"
#include "sclab/parallel.hpp"

namespace sclab {

namespace {

constexpr double kPi = std::numbers::pi;

enum class Kernel { DifferenceQuotient, Remainder };

// Inputs of the lattice sum: weights on x-nodes (zero = skipped) and, per axis,
// the transform factor of phi2 at y = 2 m dx / eps for m in [-(N-1), N-1].
struct LatticeInput {
    std::vector<double> weight;
    std::vector<std::vector<cplx>> fy;
};

std::vector<cplx> transform_table(const Axis& a, double eps, double centre, double radius, bool smoothed) {
    const long N = static_cast<long>(a.count);
    std::vector<cplx> t(static_cast<std::size_t>(2 * N - 1));
    for (long m = -(N - 1); m <= N - 1; ++m) {
        const double y = 2.0 * static_cast<double>(m) * a.spacing() / eps;
        cplx v = radius * bump_transform(radius * y) * std::polar(1.0, -centre * y);
        if (smoothed) v *= std::exp(-0.25 * eps * y * y);
        t[static_cast<std::size_t>(m + N - 1)] = v;
    }
    return t;
}

LatticeInput plain_input(const Wavefunction& psi, const TestFunction& phi) {
    const auto& g = psi.grid;
    LatticeInput in;
    in.weight.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) in.weight[j] = phi.phi1(g.point(j));
    for (int d = 0; d < g.dim(); ++d) {
        const auto k = static_cast<std::size_t>(d);
        in.fy.push_back(transform_table(g.axis(d), psi.eps, phi.p_factor.centre[k], phi.p_factor.radius[k], false));
    }
    return in;
}

// phi * G_eps^{(2n)} = (phi1 * G)(phi2 * G): the x-factor is tabulated per axis, the
// p-factor transform picks up exp(-eps |y|^2 / 4).
LatticeInput smoothed_input(const Wavefunction& psi, const TestFunction& phi) {
    const auto& g = psi.grid;
    const int n = g.dim();
    std::vector<std::vector<double>> ax(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        const auto& a = g.axis(d);
        BumpFactor f;
        f.centre = {phi.x_factor.centre[k], 0.0};
        f.radius = {phi.x_factor.radius[k], 1.0};
        double peak = 0.0;
        for (std::size_t i = 0; i < a.count; ++i) {
            ax[k].push_back(f.smoothed({a.node(i), 0.0}, 1, psi.eps));
            peak = std::max(peak, ax[k].back());
        }
        // Drop the Gaussian tail far outside the support.
        for (auto& v : ax[k])
            if (v < 1e-17 * peak) v = 0.0;
    }
    LatticeInput in;
    in.weight.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const auto idx = g.unflatten(j);
        double w = phi.coefficient;
        for (int d = 0; d < n; ++d) w *= ax[static_cast<std::size_t>(d)][idx[static_cast<std::size_t>(d)]];
        in.weight[j] = w;
    }
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        in.fy.push_back(transform_table(g.axis(d), psi.eps, phi.p_factor.centre[k], phi.p_factor.radius[k], true));
    }
    return in;
}

LatticePairing lattice_sum(const Wavefunction& psi, const Potential& V, const LatticeInput& in, Kernel kernel) {
    const auto& g = psi.grid;
    const int n = g.dim();
    require(V.dim() == n, ErrorKind::InvalidArgument, "potential and grid dimensions differ");
    const double eps = psi.eps;
    std::vector<double> v(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) v[j] = V.value(g.point(j));

    const std::size_t X = g.size();
    std::vector<double> re_in(X, 0.0), re_out(X, 0.0), im(X, 0.0);
    const long N0 = static_cast<long>(g.axis(0).count);
    const long N1 = n == 2 ? static_cast<long>(g.axis(1).count) : 1;
    std::array<double, 2> ystep{0.0, 0.0};
    for (int d = 0; d < n; ++d) ystep[static_cast<std::size_t>(d)] = 2.0 * g.axis(d).spacing() / eps;
    const double inner2 = 1.0 / eps;  // sqrt(eps)|y| <= 1  <=>  |y|^2 <= 1/eps

    parallel_for(X, [&](std::size_t j) {
        const double w = in.weight[j];
        if (w == 0.0) return;
        const auto idx = g.unflatten(j);
        Coord grad{0.0, 0.0};
        if (kernel == Kernel::Remainder) grad = V.gradient(g.point(j));
        cplx s_in{}, s_out{};
        const long a = static_cast<long>(idx[0]);
        const long b = n == 2 ? static_cast<long>(idx[1]) : 0;
        const long r0 = std::min(a, N0 - 1 - a);
        const long r1 = n == 2 ? std::min(b, N1 - 1 - b) : 0;
        for (long m0 = -r0; m0 <= r0; ++m0) {
            const double y0 = static_cast<double>(m0) * ystep[0];
            const cplx f0 = in.fy[0][static_cast<std::size_t>(m0 + N0 - 1)];
            for (long m1 = -r1; m1 <= r1; ++m1) {
                const double y1 = static_cast<double>(m1) * ystep[1];
                const cplx f = n == 2 ? f0 * in.fy[1][static_cast<std::size_t>(m1 + N1 - 1)] : f0;
                const auto plus = static_cast<std::size_t>((a + m0) * N1 + (b + m1));
                const auto minus = static_cast<std::size_t>((a - m0) * N1 + (b - m1));
                double k = (v[plus] - v[minus]) / eps;
                if (kernel == Kernel::Remainder) k -= grad[0] * y0 + grad[1] * y1;
                const cplx t = k * psi.values[plus] * std::conj(psi.values[minus]) * f;
                if (y0 * y0 + y1 * y1 <= inner2)
                    s_in += t;
                else
                    s_out += t;
            }
        }
        // Multiply by -i: Re(-i z) = Im z.
        re_in[j] = w * s_in.imag();
        re_out[j] = w * s_out.imag();
        im[j] = w * (s_in.real() + s_out.real());
    });
    double scale = std::pow(2.0 * kPi, -n);
    for (int d = 0; d < n; ++d) scale *= g.axis(d).spacing() * 2.0 * g.axis(d).spacing() / eps;
    LatticePairing r;
    r.inner = tree_sum(re_in) * scale;
    r.outer = tree_sum(re_out) * scale;
    r.total = r.inner + r.outer;
    r.imag_residue = std::abs(tree_sum(im) * scale);
    return r;
}

void check_dims(const Wavefunction& psi, const TestFunction& phi) {
    require(phi.n == psi.grid.dim(), ErrorKind::InvalidArgument, "test function and grid dimensions differ");
}

void check_tail(const Wavefunction& psi) {
    const double edge = boundary_mass(psi, 1.0 / 16.0);
    if (edge > 1e-6)
        throw Error(ErrorKind::TailOverflow, "mass " + std::to_string(edge) + " near the box boundary; the y-lattice would be truncated");
}

void check_support(const Potential& V, const TestFunction& phi, double tube) {
    if (V.singular_enabled() && V.softening() == 0.0 && phi.x_support_distance_to_singular_set(V) <= tube)
        throw Error(ErrorKind::SupportViolation, "test function support meets the tube around the singular set");
}

double moment_weight(const TestFunction& phi, double eps, bool outer_only) {
    if (!outer_only) return first_moment_norm(phi);
    const double cut = 1.0 / std::sqrt(eps);
    return std::abs(phi.coefficient) *
           transform_weighted_integral(phi.p_factor, phi.n, [cut](double y) { return y > cut ? y : 0.0; });
}

// Trigonometric interpolation of psi onto a grid refined by an odd factor; the
// refined axes keep the cell-centred layout of the original box.
struct Refined {
    std::vector<Axis> axes;
    std::vector<cplx> values;
};

Refined refine(const Wavefunction& psi, std::size_t factor) {
    const auto& g = psi.grid;
    const int n = g.dim();
    std::vector<std::size_t> shape, fine_shape;
    std::vector<Axis> fine_axes;
    for (const auto& a : g.axes()) {
        shape.push_back(a.count);
        fine_shape.push_back(a.count * factor);
        fine_axes.push_back(Axis{a.count * factor, a.lo, a.hi});
    }
    std::vector<cplx> c = psi.values;
    fft_inplace(c, shape, FftDirection::Forward);
    std::size_t total = 1;
    for (auto s : fine_shape) total *= s;
    std::vector<cplx> big(total, cplx{});
    // Coarse node 0 sits at fine index (factor - 1)/2; the padded inverse FFT
    // evaluates at fine index 0 + shift, so apply the phase of that offset.
    const double shift = -static_cast<double>((factor - 1) / 2) / static_cast<double>(factor);
    const std::size_t coarse_total = psi.values.size();
    for (std::size_t q = 0; q < coarse_total; ++q) {
        std::size_t rem = q, dst = 0, stride = 1;
        double phase = 0.0;
        std::array<std::size_t, 2> pos{0, 0};
        for (int d = n - 1; d >= 0; --d) {
            const auto k = static_cast<std::size_t>(d);
            const std::size_t N = shape[k];
            const long f = signed_frequency(rem % N, N);
            rem /= N;
            phase += 2.0 * kPi * static_cast<double>(f) * shift / static_cast<double>(N);
            pos[k] = f >= 0 ? static_cast<std::size_t>(f) : static_cast<std::size_t>(static_cast<long>(fine_shape[k]) + f);
        }
        for (int d = n - 1; d >= 0; --d) {
            dst += pos[static_cast<std::size_t>(d)] * stride;
            stride *= fine_shape[static_cast<std::size_t>(d)];
        }
        big[dst] = c[q] * std::polar(1.0, phase);
    }
    fft_inplace(big, fine_shape, FftDirection::Backward);
    const double norm = 1.0 / static_cast<double>(coarse_total);
    for (auto& v : big) v *= norm;
    return {fine_axes, std::move(big)};
}

}  // namespace

LatticePairing i_eps_pairing(const Wavefunction& psi, const Potential& V, const TestFunction& phi) {
    check_dims(psi, phi);
    return lattice_sum(psi, V, plain_input(psi, phi), Kernel::DifferenceQuotient);
}

LatticePairing e_eps_pairing(const Wavefunction& psi, const Potential& V, const TestFunction& phi) {
    check_dims(psi, phi);
    return lattice_sum(psi, V, plain_input(psi, phi), Kernel::Remainder);
}

double transport_wigner(const PhaseSpaceField& w, const Potential& V, const TestFunction& phi) {
    require(phi.n == w.dim(), ErrorKind::InvalidArgument, "test function and field dimensions differ");
    const int n = phi.n;
    const std::size_t X = w.x_size(), P = w.p_size();
    std::vector<Coord> dphi2(P);
    for (std::size_t q = 0; q < P; ++q) dphi2[q] = phi.p_factor.gradient(w.p_node(q), n);
    std::vector<double> rows(X, 0.0);
    for (std::size_t i = 0; i < X; ++i) {
        const Coord x = w.x_node(i);
        const double f1 = phi.phi1(x);
        if (f1 == 0.0) continue;
        const Coord gv = V.gradient(x);
        double s = 0.0;
        for (std::size_t q = 0; q < P; ++q) s += (gv[0] * dphi2[q][0] + gv[1] * dphi2[q][1]) * w.values[i * P + q];
        rows[i] = f1 * s;
    }
    return tree_sum(rows) * w.cell_volume();
}

double transport_husimi(const Wavefunction& psi, const Potential& V, const TestFunction& phi, const HusimiOptions& options) {
    check_dims(psi, phi);
    const int n = phi.n;
    const auto layout = husimi_layout(psi.grid, psi.eps, options);
    const std::size_t P = axes_size(layout.p_axes), Y = axes_size(layout.y_axes);
    std::vector<Coord> dphi2(P);
    for (std::size_t q = 0; q < P; ++q) dphi2[q] = phi.p_factor.gradient(axes_node(layout.p_axes, q), n);
    std::vector<double> rows(Y, 0.0);
    husimi_rows(
        psi, layout, options.skip_below,
        [&](std::size_t y, std::span<const double> row) {
            if (row.empty()) return;
            const Coord x = axes_node(layout.y_axes, y);
            const Coord gv = V.gradient(x);
            double s = 0.0;
            for (std::size_t q = 0; q < P; ++q) s += (gv[0] * dphi2[q][0] + gv[1] * dphi2[q][1]) * row[q];
            rows[y] = phi.phi1(x) * s;
        },
        [&](std::size_t y) { return phi.phi1(axes_node(layout.y_axes, y)) != 0.0; });
    double cell = 1.0;
    for (const auto& a : layout.y_axes) cell *= a.spacing();
    for (const auto& a : layout.p_axes) cell *= a.spacing();
    return tree_sum(rows) * cell;
}

double bound_lipschitz(double gradient_sup, const TestFunction& phi) {
    return std::pow(2.0 * kPi, -phi.n) * gradient_sup * first_moment_norm(phi);
}

double bound_lipschitz(const Potential& V, const TestFunction& phi) {
    if (V.singular_enabled()) return std::numeric_limits<double>::infinity();
    return bound_lipschitz(V.bounded().lipschitz_bound(V.dim()), phi);
}

double coulomb_moment(const Wavefunction& psi, const Potential& pot) {
    if (!pot.singular_enabled()) return 0.0;
    const auto& g = psi.grid;
    std::vector<double> t(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double u = pot.singular_value(g.point(j));
        t[j] = u * u * std::norm(psi.values[j]);
    }
    return tree_sum(t) * g.cell_volume();
}

double coulomb_moment_refined(const Wavefunction& psi, const Potential& pot, std::size_t factor) {
    require(factor % 2 == 1, ErrorKind::InvalidArgument, "refinement factor must be odd");
    if (!pot.singular_enabled()) return 0.0;
    const auto r = refine(psi, factor);
    std::vector<double> t(r.values.size());
    double cell = 1.0;
    for (const auto& a : r.axes) cell *= a.spacing();
    for (std::size_t j = 0; j < t.size(); ++j) {
        const double u = pot.singular_value(axes_node(r.axes, j));
        t[j] = u * u * std::norm(r.values[j]);
    }
    return tree_sum(t) * cell;
}

double bound_coulomb(const Wavefunction& psi, const Potential& pot, const TestFunction& phi) {
    if (!pot.singular_enabled()) return 0.0;
    return pot.coulomb_error_constant() * moment_weight(phi, psi.eps, false) * coulomb_moment(psi, pot);
}

double bound_coulomb_outer(const Wavefunction& psi, const Potential& pot, const TestFunction& phi) {
    if (!pot.singular_enabled()) return 0.0;
    return pot.coulomb_error_constant() * moment_weight(phi, psi.eps, true) * coulomb_moment(psi, pot);
}

ErrorPairing pair_I_eps(const Potential& V, const Wavefunction& psi, const TestFunction& phi, const PairingOptions& options) {
    check_dims(psi, phi);
    check_support(V, phi, options.tube);
    check_tail(psi);
    ErrorPairing r;
    r.eps = psi.eps;
    const auto lp = i_eps_pairing(psi, V, phi);
    r.pairing = lp.total;
    r.region_inner = lp.inner;
    r.region_outer = lp.outer;
    r.imag_residue = lp.imag_residue;
    r.transport = transport_husimi(psi, V, phi, options.husimi);
    r.discrepancy = r.pairing + r.transport;
    const bool pure_singular = V.singular_enabled() && V.bounded().kind == BoundedKind::Zero && V.softening() == 0.0;
    if (pure_singular)
        r.bound = bound_coulomb(psi, V, phi);
    else if (!V.singular_enabled() && !V.bounded().smooth_unbounded())
        r.bound = bound_lipschitz(V, phi);
    else
        r.bound = std::numeric_limits<double>::infinity();
    return r;
}

ErrorPairing coulomb_discrepancy(const Wavefunction& psi, const Potential& pot, const TestFunction& phi,
                                 const PairingOptions& options) {
    check_dims(psi, phi);
    require(pot.singular_enabled(), ErrorKind::InvalidArgument, "potential has no singular part");
    check_support(pot, phi, options.tube);
    check_tail(psi);
    const auto us = pot.singular_only();
    ErrorPairing r;
    r.eps = psi.eps;
    const auto lp = lattice_sum(psi, us, smoothed_input(psi, phi), Kernel::DifferenceQuotient);
    r.pairing = lp.total;
    r.region_inner = lp.inner;
    r.region_outer = lp.outer;
    r.imag_residue = lp.imag_residue;
    r.transport = transport_husimi(psi, us, phi, options.husimi);
    r.discrepancy = std::abs(r.pairing + r.transport);
    r.bound = bound_coulomb_outer(psi, us, phi);
    return r;
}

void write_error_csv(const std::filesystem::path& path, std::span<const ErrorPairing> rows) {
    FILE* fp = std::fopen(path.string().c_str(), "w");
    require(fp != nullptr, ErrorKind::InvalidArgument, "cannot open " + path.string());
    std::fprintf(fp, "eps,pairing,transport,discrepancy,bound,region_outer,region_inner\n");
    for (const auto& r : rows)
        std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.eps, r.pairing, r.transport, r.discrepancy,
                     r.bound, r.region_outer, r.region_inner);
    std::fclose(fp);
}

}  // namespace sclab

#include "sclab/phase_space.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "sclab/error.hpp"
#include "sclab/parallel.hpp"
#include "sclab/propagator.hpp"

namespace sclab {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t wrap(long m, std::size_t n) {
    const long nn = static_cast<long>(n);
    return static_cast<std::size_t>(((m % nn) + nn) % nn);
}

Axis centred_axis(std::size_t count, double step) {
    const double lo = (-static_cast<double>(count / 2) - 0.5) * step;
    return Axis{count, lo, lo + static_cast<double>(count) * step};
}

double cell_of(const std::vector<Axis>& axes) {
    double v = 1.0;
    for (const auto& a : axes) v *= a.spacing();
    return v;
}

// Gaussian (pi eps)^{-1/2} exp(-(z - z')^2 / eps) transfer matrix from src nodes to
// dst nodes times the source spacing; entries below exp(-40) are dropped.
std::vector<double> gaussian_transfer(const Axis& src, const Axis& dst, double eps) {
    std::vector<double> k(dst.count * src.count, 0.0);
    const double c = src.spacing() / std::sqrt(kPi * eps);
    for (std::size_t a = 0; a < dst.count; ++a) {
        const double y = dst.node(a);
        for (std::size_t j = 0; j < src.count; ++j) {
            const double d = y - src.node(j);
            const double e = d * d / eps;
            if (e < 40.0) k[a * src.count + j] = c * std::exp(-e);
        }
    }
    return k;
}

// out[dst multi-index] = sum_src prod_d K_d(dst_d, src_d) in[src], row-major rank 1 or 2.
std::vector<double> separable_transfer(const std::vector<double>& in, const std::vector<Axis>& src,
                                       const std::vector<Axis>& dst, double eps) {
    if (src.size() == 1) {
        const auto k = gaussian_transfer(src[0], dst[0], eps);
        std::vector<double> out(dst[0].count, 0.0);
        for (std::size_t a = 0; a < dst[0].count; ++a) {
            double s = 0.0;
            for (std::size_t j = 0; j < src[0].count; ++j) s += k[a * src[0].count + j] * in[j];
            out[a] = s;
        }
        return out;
    }
    const auto k1 = gaussian_transfer(src[0], dst[0], eps);
    const auto k2 = gaussian_transfer(src[1], dst[1], eps);
    const std::size_t n1 = src[0].count, n2 = src[1].count, m1 = dst[0].count, m2 = dst[1].count;
    // Contract the last axis first.
    std::vector<double> mid(n1 * m2, 0.0);
    for (std::size_t j1 = 0; j1 < n1; ++j1)
        for (std::size_t b = 0; b < m2; ++b) {
            double s = 0.0;
            for (std::size_t j2 = 0; j2 < n2; ++j2) s += k2[b * n2 + j2] * in[j1 * n2 + j2];
            mid[j1 * m2 + b] = s;
        }
    std::vector<double> out(m1 * m2, 0.0);
    for (std::size_t a = 0; a < m1; ++a)
        for (std::size_t j1 = 0; j1 < n1; ++j1) {
            const double w = k1[a * n1 + j1];
            if (w == 0.0) continue;
            for (std::size_t b = 0; b < m2; ++b) out[a * m2 + b] += w * mid[j1 * m2 + b];
        }
    return out;
}

// In-place 1-D Gaussian convolution along one axis of a row-major array.
void convolve_axis(std::vector<double>& data, const std::vector<std::size_t>& dims, std::size_t axis,
                   const Axis& ax, double eps) {
    const auto k = gaussian_transfer(ax, ax, eps);
    std::size_t inner = 1;
    for (std::size_t d = axis + 1; d < dims.size(); ++d) inner *= dims[d];
    std::size_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= dims[d];
    const std::size_t n = dims[axis];
    parallel_for(outer, [&](std::size_t o) {
        std::vector<double> line(n), res(n);
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * n * inner + i;
            for (std::size_t j = 0; j < n; ++j) line[j] = data[base + j * inner];
            for (std::size_t a = 0; a < n; ++a) {
                double s = 0.0;
                const double* row = &k[a * n];
                for (std::size_t j = 0; j < n; ++j) s += row[j] * line[j];
                res[a] = s;
            }
            for (std::size_t j = 0; j < n; ++j) data[base + j * inner] = res[j];
        }
    });
}

template <class T>
void put(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    require(static_cast<bool>(is), ErrorKind::InvalidArgument, "truncated dump file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

struct HusimiWorkspace {
    std::vector<cplx> buffer;
    std::vector<std::vector<double>> gauss;  // per axis, indexed by window position
    std::vector<std::size_t> shape;
    double scale = 0.0;
};

HusimiWorkspace make_workspace(const Wavefunction& psi, const HusimiLayout& layout) {
    HusimiWorkspace ws;
    const int n = psi.grid.dim();
    const double eps = psi.eps;
    const std::size_t M = layout.window;
    ws.buffer.resize(static_cast<std::size_t>(std::pow(M, n)));
    double dx2 = 1.0;
    for (int d = 0; d < n; ++d) {
        const double dx = psi.grid.axis(d).spacing();
        dx2 *= dx * dx;
        std::vector<double> g(M);
        for (std::size_t w = 0; w < M; ++w) {
            const double s = (static_cast<double>(w) - static_cast<double>(M / 2)) * dx;
            g[w] = std::exp(-s * s / (2.0 * eps));
        }
        ws.gauss.push_back(std::move(g));
        ws.shape.push_back(M);
    }
    ws.scale = std::pow(2.0 * kPi, -n) * std::pow(eps, -n) * std::pow(kPi * eps, -0.5 * n) * dx2;
    return ws;
}

std::atomic<double> g_husimi_min{std::numeric_limits<double>::infinity()};

void note_husimi_min(std::span<const double> row) {
    if (row.empty()) return;
    const double m = *std::min_element(row.begin(), row.end());
    double cur = g_husimi_min.load(std::memory_order_relaxed);
    while (m < cur && !g_husimi_min.compare_exchange_weak(cur, m, std::memory_order_relaxed)) {
    }
}

// Fills row (centred p order) for one y-node; returns false when skipped.
bool husimi_row(const Wavefunction& psi, const HusimiLayout& layout, std::size_t y_flat, double skip_below,
                HusimiWorkspace& ws, std::vector<double>& row) {
    const auto& g = psi.grid;
    const int n = g.dim();
    const std::size_t M = layout.window;
    const long half = static_cast<long>(M / 2);
    std::array<long, 2> centre{0, 0};
    {
        std::size_t rem = y_flat;
        for (int d = n - 1; d >= 0; --d) {
            const auto& ya = layout.y_axes[static_cast<std::size_t>(d)];
            centre[static_cast<std::size_t>(d)] = static_cast<long>(layout.offset + layout.stride * (rem % ya.count));
            rem /= ya.count;
        }
    }
    std::fill(ws.buffer.begin(), ws.buffer.end(), cplx{});
    double mass = 0.0;
    if (n == 1) {
        const long N = static_cast<long>(g.axis(0).count);
        for (std::size_t w = 0; w < M; ++w) {
            const long m = static_cast<long>(w) - half;
            const long j = centre[0] + m;
            if (j < 0 || j >= N) continue;
            const cplx v = psi.values[static_cast<std::size_t>(j)] * ws.gauss[0][w];
            ws.buffer[wrap(m, M)] = v;
            mass += std::norm(v);
        }
    } else {
        const long N0 = static_cast<long>(g.axis(0).count), N1 = static_cast<long>(g.axis(1).count);
        for (std::size_t w0 = 0; w0 < M; ++w0) {
            const long m0 = static_cast<long>(w0) - half;
            const long j0 = centre[0] + m0;
            if (j0 < 0 || j0 >= N0) continue;
            const std::size_t r0 = wrap(m0, M) * M;
            for (std::size_t w1 = 0; w1 < M; ++w1) {
                const long m1 = static_cast<long>(w1) - half;
                const long j1 = centre[1] + m1;
                if (j1 < 0 || j1 >= N1) continue;
                const cplx v = psi.values[static_cast<std::size_t>(j0 * N1 + j1)] * (ws.gauss[0][w0] * ws.gauss[1][w1]);
                ws.buffer[r0 + wrap(m1, M)] = v;
                mass += std::norm(v);
            }
        }
    }
    // |DFT|^2 <= M^n sum |g|^2 (Cauchy-Schwarz).
    if (ws.scale * mass * static_cast<double>(ws.buffer.size()) < skip_below) return false;
    fft_inplace(ws.buffer, ws.shape, FftDirection::Forward);
    row.resize(ws.buffer.size());
    if (n == 1) {
        for (std::size_t c = 0; c < M; ++c) row[c] = ws.scale * std::norm(ws.buffer[(c + M / 2) % M]);
    } else {
        for (std::size_t c0 = 0; c0 < M; ++c0) {
            const std::size_t f0 = (c0 + M / 2) % M;
            for (std::size_t c1 = 0; c1 < M; ++c1) row[c0 * M + c1] = ws.scale * std::norm(ws.buffer[f0 * M + (c1 + M / 2) % M]);
        }
    }
    note_husimi_min(row);
    return true;
}

}  // namespace

double husimi_min_observed() { return g_husimi_min.load(); }

void reset_husimi_min_observed() { g_husimi_min.store(std::numeric_limits<double>::infinity()); }

std::string to_string(FieldKind kind) { return kind == FieldKind::Wigner ? "wigner" : "husimi"; }

std::size_t axes_size(const std::vector<Axis>& axes) {
    std::size_t s = 1;
    for (const auto& a : axes) s *= a.count;
    return s;
}

Coord axes_node(const std::vector<Axis>& axes, std::size_t flat) {
    Coord c{0.0, 0.0};
    for (int d = static_cast<int>(axes.size()) - 1; d >= 0; --d) {
        const auto& a = axes[static_cast<std::size_t>(d)];
        c[static_cast<std::size_t>(d)] = a.node(flat % a.count);
        flat /= a.count;
    }
    return c;
}

std::size_t PhaseSpaceField::x_size() const { return axes_size(x_axes); }
std::size_t PhaseSpaceField::p_size() const { return axes_size(p_axes); }
Coord PhaseSpaceField::x_node(std::size_t flat) const { return axes_node(x_axes, flat); }
Coord PhaseSpaceField::p_node(std::size_t flat) const { return axes_node(p_axes, flat); }
double PhaseSpaceField::x_cell() const { return cell_of(x_axes); }
double PhaseSpaceField::p_cell() const { return cell_of(p_axes); }

double PhaseSpaceField::total() const {
    std::vector<double> rows(x_size());
    const std::size_t P = p_size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double s = 0.0;
        for (std::size_t q = 0; q < P; ++q) s += values[i * P + q];
        rows[i] = s;
    }
    return tree_sum(rows) * cell_volume();
}

double PhaseSpaceField::min_value() const {
    return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

PhaseSpaceField wigner(const Wavefunction& psi, const WignerOptions& options) {
    const auto& g = psi.grid;
    const int n = g.dim();
    if (options.check) {
        const double edge = boundary_mass(psi, options.boundary_fraction);
        if (edge > options.tail_tolerance)
            throw Error(ErrorKind::TailOverflow, "mass " + std::to_string(edge) + " near the box boundary exceeds the tail tolerance");
        const double outer = spectral_band_mass(psi, 0.5);
        if (outer > options.nyquist_tolerance)
            throw Error(ErrorKind::NyquistViolation,
                        "spectral mass " + std::to_string(outer) + " beyond half the Nyquist range; the Wigner p-grid does not cover it");
    }
    PhaseSpaceField f;
    f.kind = FieldKind::Wigner;
    f.eps = psi.eps;
    f.x_axes = g.axes();
    for (const auto& a : g.axes()) f.p_axes.push_back(centred_axis(a.count, kPi * psi.eps / a.length()));
    f.source_mass = psi.norm_squared();
    const std::size_t X = g.size(), P = f.p_size();
    f.values.assign(X * P, 0.0);
    std::vector<std::size_t> shape;
    for (const auto& a : g.axes()) shape.push_back(a.count);
    const double scale = std::pow(kPi * psi.eps, -n) * g.cell_volume();
    std::vector<double> imag(X, 0.0);

    parallel_for(X, [&](std::size_t j) {
        std::vector<cplx> buf(P, cplx{});
        const auto idx = g.unflatten(j);
        if (n == 1) {
            const long N = static_cast<long>(shape[0]);
            const long jj = static_cast<long>(idx[0]);
            const long reach = std::min(jj, N - 1 - jj);
            for (long m = -reach; m <= reach; ++m)
                buf[wrap(m, shape[0])] = psi.values[static_cast<std::size_t>(jj + m)] * std::conj(psi.values[static_cast<std::size_t>(jj - m)]);
        } else {
            const long N0 = static_cast<long>(shape[0]), N1 = static_cast<long>(shape[1]);
            const long a = static_cast<long>(idx[0]), b = static_cast<long>(idx[1]);
            const long r0 = std::min(a, N0 - 1 - a), r1 = std::min(b, N1 - 1 - b);
            for (long m0 = -r0; m0 <= r0; ++m0)
                for (long m1 = -r1; m1 <= r1; ++m1) {
                    const auto plus = static_cast<std::size_t>((a + m0) * N1 + (b + m1));
                    const auto minus = static_cast<std::size_t>((a - m0) * N1 + (b - m1));
                    buf[wrap(m0, shape[0]) * shape[1] + wrap(m1, shape[1])] = psi.values[plus] * std::conj(psi.values[minus]);
                }
        }
        fft_inplace(buf, shape, FftDirection::Forward);
        double im = 0.0;
        double* out = &f.values[j * P];
        if (n == 1) {
            const std::size_t N = shape[0];
            for (std::size_t c = 0; c < N; ++c) {
                const cplx v = buf[(c + N / 2) % N];
                out[c] = scale * v.real();
                im = std::max(im, std::abs(scale * v.imag()));
            }
        } else {
            const std::size_t N0 = shape[0], N1 = shape[1];
            for (std::size_t c0 = 0; c0 < N0; ++c0)
                for (std::size_t c1 = 0; c1 < N1; ++c1) {
                    const cplx v = buf[((c0 + N0 / 2) % N0) * N1 + (c1 + N1 / 2) % N1];
                    out[c0 * N1 + c1] = scale * v.real();
                    im = std::max(im, std::abs(scale * v.imag()));
                }
        }
        imag[j] = im;
    });
    f.imag_residue = *std::max_element(imag.begin(), imag.end());
    return f;
}

HusimiLayout husimi_layout(const SpatialGrid& grid, double eps, const HusimiOptions& options) {
    require(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    double dx = grid.axis(0).spacing();
    std::size_t nmin = grid.axis(0).count;
    for (const auto& a : grid.axes()) {
        dx = std::max(dx, a.spacing());
        nmin = std::min(nmin, a.count);
    }
    HusimiLayout l;
    const double se = std::sqrt(eps);
    l.stride = options.stride;
    if (l.stride == 0) {
        l.stride = 1;
        while (2 * l.stride * dx <= options.stride_sigmas * se && 2 * l.stride <= nmin / 16) l.stride *= 2;
    }
    require(is_power_of_two(l.stride) && l.stride <= nmin / 16, ErrorKind::InvalidArgument,
            "Husimi stride must be a power of two leaving at least 16 y-nodes per axis");
    l.window = options.window;
    if (l.window == 0) {
        const double need = 2.0 * std::ceil(options.window_sigmas * se / dx);
        l.window = 16;
        if (options.compact_window)
            l.window = std::min(nmin, std::max<std::size_t>(16, 16 * static_cast<std::size_t>(std::ceil(need / 16.0))));
        else
            while (static_cast<double>(l.window) < need && l.window < nmin) l.window *= 2;
    }
    require(l.window % 16 == 0 && l.window >= 16 && l.window <= nmin, ErrorKind::InvalidArgument,
            "Husimi window must be a multiple of 16 between 16 and the grid size");
    l.offset = l.stride / 2;
    for (const auto& a : grid.axes()) {
        const double h = a.spacing() * static_cast<double>(l.stride);
        const std::size_t count = a.count / l.stride;
        const double lo = a.node(l.offset) - 0.5 * h;
        l.y_axes.push_back(Axis{count, lo, lo + static_cast<double>(count) * h});
        l.p_axes.push_back(centred_axis(l.window, 2.0 * kPi * eps / (static_cast<double>(l.window) * a.spacing())));
    }
    return l;
}

void husimi_rows(const Wavefunction& psi, const HusimiLayout& layout, double skip_below,
                 const HusimiRowCallback& callback, const HusimiRowFilter& wanted) {
    auto ws = make_workspace(psi, layout);
    std::vector<double> row;
    const std::size_t Y = axes_size(layout.y_axes);
    for (std::size_t y = 0; y < Y; ++y) {
        if ((!wanted || wanted(y)) && husimi_row(psi, layout, y, skip_below, ws, row))
            callback(y, std::span<const double>(row));
        else
            callback(y, std::span<const double>());
    }
}

PhaseSpaceField husimi(const Wavefunction& psi, const HusimiOptions& options) {
    const auto layout = husimi_layout(psi.grid, psi.eps, options);
    PhaseSpaceField f;
    f.kind = FieldKind::Husimi;
    f.eps = psi.eps;
    f.x_axes = layout.y_axes;
    f.p_axes = layout.p_axes;
    f.source_mass = psi.norm_squared();
    const std::size_t Y = f.x_size(), P = f.p_size();
    f.values.assign(Y * P, 0.0);
    const std::size_t chunks = std::min<std::size_t>(Y, 64);
    parallel_for(chunks, [&](std::size_t c) {
        auto ws = make_workspace(psi, layout);
        std::vector<double> row;
        for (std::size_t y = c * Y / chunks; y < (c + 1) * Y / chunks; ++y)
            if (husimi_row(psi, layout, y, options.skip_below, ws, row)) std::copy(row.begin(), row.end(), f.values.begin() + static_cast<long>(y * P));
    });
    return f;
}

double husimi_at(const Wavefunction& psi, const Coord& y, const Coord& p) {
    const auto& g = psi.grid;
    const int n = g.dim();
    const double eps = psi.eps;
    // Index ranges where exp(-|x - y|^2 / (2 eps)) exceeds exp(-50).
    std::array<std::size_t, 2> lo{0, 0}, hi{1, 1};
    std::vector<cplx> factor[2];
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        const auto& a = g.axis(d);
        const double reach = 10.0 * std::sqrt(eps);
        const double fl = std::floor((y[k] - reach - a.lo) / a.spacing());
        const double fh = std::ceil((y[k] + reach - a.lo) / a.spacing());
        lo[k] = static_cast<std::size_t>(std::clamp(fl, 0.0, static_cast<double>(a.count)));
        hi[k] = static_cast<std::size_t>(std::clamp(fh, 0.0, static_cast<double>(a.count)));
        for (std::size_t j = lo[k]; j < hi[k]; ++j) {
            const double x = a.node(j);
            factor[k].push_back(std::exp(-(x - y[k]) * (x - y[k]) / (2.0 * eps)) * std::polar(1.0, -p[k] * x / eps));
        }
    }
    cplx s{};
    if (n == 1) {
        for (std::size_t j = lo[0]; j < hi[0]; ++j) s += psi.values[j] * factor[0][j - lo[0]];
    } else {
        const std::size_t N1 = g.axis(1).count;
        for (std::size_t a = lo[0]; a < hi[0]; ++a) {
            cplx r{};
            for (std::size_t b = lo[1]; b < hi[1]; ++b) r += psi.values[a * N1 + b] * factor[1][b - lo[1]];
            s += r * factor[0][a - lo[0]];
        }
    }
    s *= g.cell_volume();
    return std::pow(2.0 * kPi, -n) * std::pow(eps, -n) * std::pow(kPi * eps, -0.5 * n) * std::norm(s);
}

PhaseSpaceField husimi_from_wigner(const PhaseSpaceField& w) {
    PhaseSpaceField f = w;
    f.kind = FieldKind::Husimi;
    std::vector<std::size_t> dims;
    std::vector<Axis> all;
    for (const auto& a : w.x_axes) {
        dims.push_back(a.count);
        all.push_back(a);
    }
    for (const auto& a : w.p_axes) {
        dims.push_back(a.count);
        all.push_back(a);
    }
    for (std::size_t d = 0; d < dims.size(); ++d) convolve_axis(f.values, dims, d, all[d], w.eps);
    return f;
}

std::vector<double> x_marginal(const PhaseSpaceField& f) {
    const std::size_t X = f.x_size(), P = f.p_size();
    const double dp = f.p_cell();
    std::vector<double> m(X);
    for (std::size_t i = 0; i < X; ++i) {
        double s = 0.0;
        for (std::size_t q = 0; q < P; ++q) s += f.values[i * P + q];
        m[i] = s * dp;
    }
    return m;
}

std::vector<double> p_marginal(const PhaseSpaceField& f) {
    const std::size_t X = f.x_size(), P = f.p_size();
    const double dx = f.x_cell();
    std::vector<double> m(P, 0.0);
    for (std::size_t i = 0; i < X; ++i)
        for (std::size_t q = 0; q < P; ++q) m[q] += f.values[i * P + q];
    for (auto& v : m) v *= dx;
    return m;
}

std::vector<double> position_density(const Wavefunction& psi) {
    std::vector<double> r(psi.values.size());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = std::norm(psi.values[j]);
    return r;
}

std::vector<double> momentum_density(const Wavefunction& psi, const std::vector<Axis>& p_axes) {
    const auto& g = psi.grid;
    const int n = g.dim();
    require(static_cast<int>(p_axes.size()) == n, ErrorKind::InvalidArgument, "momentum axes do not match the grid");
    std::vector<std::vector<cplx>> e(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
        const auto& xa = g.axis(d);
        const auto& pa = p_axes[static_cast<std::size_t>(d)];
        auto& t = e[static_cast<std::size_t>(d)];
        t.resize(pa.count * xa.count);
        for (std::size_t q = 0; q < pa.count; ++q)
            for (std::size_t j = 0; j < xa.count; ++j) t[q * xa.count + j] = std::polar(1.0, -pa.node(q) * xa.node(j) / psi.eps);
    }
    const double norm = std::pow(2.0 * kPi * psi.eps, -n) * g.cell_volume() * g.cell_volume();
    if (n == 1) {
        const std::size_t N = g.axis(0).count, Q = p_axes[0].count;
        std::vector<double> out(Q);
        for (std::size_t q = 0; q < Q; ++q) {
            cplx s{};
            for (std::size_t j = 0; j < N; ++j) s += e[0][q * N + j] * psi.values[j];
            out[q] = norm * std::norm(s);
        }
        return out;
    }
    const std::size_t N0 = g.axis(0).count, N1 = g.axis(1).count, Q0 = p_axes[0].count, Q1 = p_axes[1].count;
    std::vector<cplx> mid(N0 * Q1);
    for (std::size_t j0 = 0; j0 < N0; ++j0)
        for (std::size_t q1 = 0; q1 < Q1; ++q1) {
            cplx s{};
            for (std::size_t j1 = 0; j1 < N1; ++j1) s += e[1][q1 * N1 + j1] * psi.values[j0 * N1 + j1];
            mid[j0 * Q1 + q1] = s;
        }
    std::vector<double> out(Q0 * Q1);
    for (std::size_t q0 = 0; q0 < Q0; ++q0)
        for (std::size_t q1 = 0; q1 < Q1; ++q1) {
            cplx s{};
            for (std::size_t j0 = 0; j0 < N0; ++j0) s += e[0][q0 * N0 + j0] * mid[j0 * Q1 + q1];
            out[q0 * Q1 + q1] = norm * std::norm(s);
        }
    return out;
}

std::vector<double> smoothed_position_density(const Wavefunction& psi, const std::vector<Axis>& y_axes) {
    return separable_transfer(position_density(psi), psi.grid.axes(), y_axes, psi.eps);
}

std::vector<double> smoothed_momentum_density(const Wavefunction& psi, const std::vector<Axis>& p_axes) {
    const auto mf = eps_fourier(psi);
    const double norm = std::pow(2.0 * kPi * psi.eps, -psi.grid.dim());
    std::vector<double> rho(mf.values.size());
    for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = norm * std::norm(mf.values[k]);
    return separable_transfer(rho, mf.axes, p_axes, psi.eps);
}

double integrate(const PhaseSpaceField& f, const std::function<double(const Coord&, const Coord&)>& fn) {
    const std::size_t X = f.x_size(), P = f.p_size();
    std::vector<Coord> pn(P);
    for (std::size_t q = 0; q < P; ++q) pn[q] = f.p_node(q);
    std::vector<double> rows(X);
    for (std::size_t i = 0; i < X; ++i) {
        const Coord x = f.x_node(i);
        double s = 0.0;
        for (std::size_t q = 0; q < P; ++q) {
            const double v = f.values[i * P + q];
            if (v != 0.0) s += fn(x, pn[q]) * v;
        }
        rows[i] = s;
    }
    return tree_sum(rows) * f.cell_volume();
}

double integrate_separable(const PhaseSpaceField& f, const std::function<double(const Coord&)>& a,
                           const std::function<double(const Coord&)>& b) {
    const std::size_t X = f.x_size(), P = f.p_size();
    std::vector<double> bp(P);
    for (std::size_t q = 0; q < P; ++q) bp[q] = b(f.p_node(q));
    std::vector<double> rows(X, 0.0);
    for (std::size_t i = 0; i < X; ++i) {
        const double ax = a(f.x_node(i));
        if (ax == 0.0) continue;
        double s = 0.0;
        for (std::size_t q = 0; q < P; ++q) s += bp[q] * f.values[i * P + q];
        rows[i] = ax * s;
    }
    return tree_sum(rows) * f.cell_volume();
}

PairingResult pair(const PhaseSpaceField& field, const TestFunction& phi) {
    require(phi.n == field.dim(), ErrorKind::InvalidArgument, "test function and field dimensions differ");
    PairingResult r;
    r.value = integrate_separable(field, [&](const Coord& x) { return phi.phi1(x); }, [&](const Coord& p) { return phi.phi2(p); });
    r.a_norm = a_norm(phi);
    r.bound = std::pow(2.0 * kPi, -phi.n) * r.a_norm * field.source_mass;
    if (std::abs(r.value) > r.bound * (1.0 + 1e-12))
        throw Error(ErrorKind::BoundViolation, "pairing " + std::to_string(r.value) + " exceeds the A-norm bound " + std::to_string(r.bound));
    return r;
}

PairingResult pair(const Wavefunction& psi, const TestFunction& phi) { return pair(wigner(psi), phi); }

MomentumMoment momentum_second_moment(const Wavefunction& psi) {
    MomentumMoment m;
    const auto w = wigner(psi);
    const auto pm = p_marginal(w);
    const double dp = w.p_cell();
    std::vector<double> terms(pm.size());
    for (std::size_t q = 0; q < pm.size(); ++q) {
        const Coord p = w.p_node(q);
        terms[q] = (p[0] * p[0] + p[1] * p[1]) * pm[q] * dp;
    }
    m.wigner_side = tree_sum(terms);
    double g = 0.0;
    for (int d = 0; d < psi.grid.dim(); ++d) g += spectral_derivative(psi, d).norm_squared();
    m.gradient_side = psi.eps * psi.eps * g;
    return m;
}

double TimeWindow::value(double t) const { return bump((2.0 * t - T) / T); }

double TimeWindow::derivative(double t) const { return bump_derivative((2.0 * t - T) / T) * 2.0 / T; }

ResidualReport husimi_pde_residual(std::span<const double> times, std::span<const Wavefunction> path,
                                   const Potential& pot, const TestFunction& phi, const TimeWindow& window,
                                   const HusimiOptions& options, double tube) {
    require(times.size() == path.size() && times.size() >= 3, ErrorKind::InvalidArgument,
            "need at least three samples with one wavefunction per time");
    if (pot.singular_enabled() && phi.x_support_distance_to_singular_set(pot) <= tube)
        throw Error(ErrorKind::SupportViolation, "test function support meets the tube around the singular set");
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i)
        require(std::abs(times[i] - times[i - 1] - dt) <= 1e-9 * std::max(1.0, std::abs(dt)), ErrorKind::InvalidArgument,
                "sample times must be equally spaced");
    const int n = phi.n;
    ResidualReport rep;
    rep.pairings.resize(times.size());
    rep.transports.resize(times.size());
    parallel_for(times.size(), [&](std::size_t s) {
        const auto& psi = path[s];
        const auto layout = husimi_layout(psi.grid, psi.eps, options);
        const std::size_t P = axes_size(layout.p_axes);
        std::vector<double> phi2(P);
        std::vector<Coord> grad2(P), pn(P);
        for (std::size_t q = 0; q < P; ++q) {
            pn[q] = axes_node(layout.p_axes, q);
            phi2[q] = phi.p_factor(pn[q], n);
            grad2[q] = phi.p_factor.gradient(pn[q], n);
        }
        const std::size_t Y = axes_size(layout.y_axes);
        std::vector<double> a_rows(Y, 0.0), b_rows(Y, 0.0);
        husimi_rows(psi, layout, options.skip_below, [&](std::size_t y, std::span<const double> row) {
            if (row.empty()) return;
            const Coord x = axes_node(layout.y_axes, y);
            const double f1 = phi.x_factor(x, n);
            const Coord g1 = phi.x_factor.gradient(x, n);
            if (f1 == 0.0 && g1[0] == 0.0 && g1[1] == 0.0) return;
            const Coord gu = f1 != 0.0 ? pot.gradient(x) : Coord{0.0, 0.0};
            double a = 0.0, b = 0.0;
            for (std::size_t q = 0; q < P; ++q) {
                const double v = row[q];
                a += phi2[q] * v;
                double adv = 0.0;
                for (int d = 0; d < n; ++d) {
                    const auto k = static_cast<std::size_t>(d);
                    adv += pn[q][k] * g1[k] * phi2[q] - gu[k] * f1 * grad2[q][k];
                }
                b += adv * v;
            }
            a_rows[y] = f1 * a;
            b_rows[y] = b;
        }, [&](std::size_t y) { return phi.x_factor(axes_node(layout.y_axes, y), n) != 0.0; });
        const double cell = cell_of(layout.y_axes) * cell_of(layout.p_axes) * phi.coefficient;
        rep.pairings[s] = tree_sum(a_rows) * cell;
        rep.transports[s] = tree_sum(b_rows) * cell;
    });
    for (std::size_t s = 0; s < times.size(); ++s) {
        const double w = (s == 0 || s + 1 == times.size()) ? 0.5 * dt : dt;
        rep.derivative_term += w * window.derivative(times[s] - times.front()) * rep.pairings[s];
        rep.transport_term += w * window.value(times[s] - times.front()) * rep.transports[s];
    }
    rep.residual = std::abs(rep.derivative_term + rep.transport_term);
    return rep;
}

void write_dump(const std::filesystem::path& path, const PhaseSpaceField& field) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::InvalidArgument, "cannot open " + path.string());
    os.write("SCLB", 4);
    put<std::uint32_t>(os, kDumpVersionPhaseSpace);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(field.dim()));
    for (const auto& a : field.x_axes) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(a.count));
        put<double>(os, a.lo);
        put<double>(os, a.hi);
    }
    put<double>(os, field.eps);
    put<std::uint32_t>(os, field.kind == FieldKind::Wigner ? 0u : 1u);
    for (const auto& a : field.p_axes) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(a.count));
        put<double>(os, a.lo);
        put<double>(os, a.hi);
    }
    for (double v : field.values) {
        put<double>(os, v);
        put<double>(os, 0.0);
    }
}

PhaseSpaceField read_phase_space_dump(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorKind::InvalidArgument, "cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    require(is && std::memcmp(magic, "SCLB", 4) == 0, ErrorKind::InvalidArgument, "not an SCLB dump");
    require(get<std::uint32_t>(is) == kDumpVersionPhaseSpace, ErrorKind::InvalidArgument, "not a phase-space dump");
    const auto n = get<std::uint32_t>(is);
    require(n == 1 || n == 2, ErrorKind::InvalidArgument, "bad dimension in dump");
    PhaseSpaceField f;
    for (std::uint32_t d = 0; d < n; ++d) {
        Axis a;
        a.count = get<std::uint32_t>(is);
        a.lo = get<double>(is);
        a.hi = get<double>(is);
        f.x_axes.push_back(a);
    }
    f.eps = get<double>(is);
    f.kind = get<std::uint32_t>(is) == 0 ? FieldKind::Wigner : FieldKind::Husimi;
    for (std::uint32_t d = 0; d < n; ++d) {
        Axis a;
        a.count = get<std::uint32_t>(is);
        a.lo = get<double>(is);
        a.hi = get<double>(is);
        f.p_axes.push_back(a);
    }
    f.values.resize(f.x_size() * f.p_size());
    for (auto& v : f.values) {
        v = get<double>(is);
        (void)get<double>(is);
    }
    return f;
}

void write_x_slice_csv(const std::filesystem::path& path, const PhaseSpaceField& field, std::size_t ix) {
    require(ix < field.x_size(), ErrorKind::InvalidArgument, "x index out of range");
    FILE* fp = std::fopen(path.string().c_str(), "w");
    require(fp != nullptr, ErrorKind::InvalidArgument, "cannot open " + path.string());
    std::fprintf(fp, field.dim() == 1 ? "p,value\n" : "p1,p2,value\n");
    for (std::size_t q = 0; q < field.p_size(); ++q) {
        const Coord p = field.p_node(q);
        if (field.dim() == 1)
            std::fprintf(fp, "%.17g,%.17g\n", p[0], field.at(ix, q));
        else
            std::fprintf(fp, "%.17g,%.17g,%.17g\n", p[0], p[1], field.at(ix, q));
    }
    std::fclose(fp);
}

void write_p_slice_csv(const std::filesystem::path& path, const PhaseSpaceField& field, std::size_t ip) {
    require(ip < field.p_size(), ErrorKind::InvalidArgument, "p index out of range");
    FILE* fp = std::fopen(path.string().c_str(), "w");
    require(fp != nullptr, ErrorKind::InvalidArgument, "cannot open " + path.string());
    std::fprintf(fp, field.dim() == 1 ? "x,value\n" : "x1,x2,value\n");
    for (std::size_t i = 0; i < field.x_size(); ++i) {
        const Coord x = field.x_node(i);
        if (field.dim() == 1)
            std::fprintf(fp, "%.17g,%.17g\n", x[0], field.at(i, ip));
        else
            std::fprintf(fp, "%.17g,%.17g,%.17g\n", x[0], x[1], field.at(i, ip));
    }
    std::fclose(fp);
}

namespace {
std::size_t nearest(const std::vector<Axis>& axes, const Coord& z) {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes.size(); ++d) {
        const auto& a = axes[d];
        const double u = std::round((z[d] - a.lo) / a.spacing() - 0.5);
        flat = flat * a.count + static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(a.count - 1)));
    }
    return flat;
}
}  // namespace

std::size_t nearest_x_index(const PhaseSpaceField& field, const Coord& x) { return nearest(field.x_axes, x); }
std::size_t nearest_p_index(const PhaseSpaceField& field, const Coord& p) { return nearest(field.p_axes, p); }

}  // namespace sclab

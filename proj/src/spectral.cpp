#include "sclab/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "sclab/error.hpp"

namespace sclab {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::size_t> shape_of(const SpatialGrid& g) {
    std::vector<std::size_t> s;
    for (const auto& a : g.axes()) s.push_back(a.count);
    return s;
}

// exp(-i p_k (lo + dx/2) / eps) for p_k = 2 pi eps k / L, per axis in FFT order.
std::vector<cplx> origin_phase(const Axis& a) {
    std::vector<cplx> ph(a.count);
    const double x0 = a.lo + 0.5 * a.spacing();
    for (std::size_t k = 0; k < a.count; ++k) {
        const double kk = static_cast<double>(signed_frequency(k, a.count));
        ph[k] = std::polar(1.0, -2.0 * kPi * kk * x0 / a.length());
    }
    return ph;
}

template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
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

}  // namespace

Wavefunction::Wavefunction(SpatialGrid g, double e) : Wavefunction(std::move(g), e, {}) {}

Wavefunction::Wavefunction(SpatialGrid g, double e, std::vector<cplx> v)
    : grid(std::move(g)), eps(e), values(std::move(v)) {
    require(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    if (values.empty()) values.assign(grid.size(), cplx{});
    require(values.size() == grid.size(), ErrorKind::InvalidArgument, "wavefunction size does not match grid");
}

double Wavefunction::norm_squared() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return s * grid.cell_volume();
}

double Wavefunction::norm() const { return std::sqrt(norm_squared()); }

cplx inner_product(const Wavefunction& a, const Wavefunction& b) {
    require(a.grid == b.grid, ErrorKind::InvalidArgument, "inner product needs matching grids");
    cplx s{};
    for (std::size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
    return s * a.grid.cell_volume();
}

Wavefunction normalize(Wavefunction psi) {
    const double nrm = psi.norm();
    require(nrm >= 1e-300, ErrorKind::ZeroNorm, "cannot normalise a field with vanishing norm");
    const double inv = 1.0 / nrm;
    for (auto& v : psi.values) v *= inv;
    return psi;
}

double MomentumField::cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes) v *= a.spacing();
    return v;
}

MomentumField eps_fourier(const Wavefunction& psi) {
    const auto& g = psi.grid;
    const auto shape = shape_of(g);
    std::vector<cplx> data = psi.values;
    fft_inplace(data, shape, FftDirection::Forward);
    const double vol = g.cell_volume();
    if (g.dim() == 1) {
        const auto ph = origin_phase(g.axis(0));
        for (std::size_t k = 0; k < data.size(); ++k) data[k] *= ph[k] * vol;
    } else {
        const auto ph0 = origin_phase(g.axis(0));
        const auto ph1 = origin_phase(g.axis(1));
        const std::size_t n1 = shape[1];
        for (std::size_t a = 0; a < shape[0]; ++a)
            for (std::size_t b = 0; b < n1; ++b) data[a * n1 + b] *= ph0[a] * ph1[b] * vol;
    }
    return MomentumField{momentum_axes(g, psi.eps), psi.eps, fft_to_centered(data, shape)};
}

Wavefunction inverse_eps_fourier(const MomentumField& phi, const SpatialGrid& grid) {
    const auto shape = shape_of(grid);
    require(phi.values.size() == grid.size(), ErrorKind::InvalidArgument, "momentum field does not match grid");
    std::vector<cplx> data = centered_to_fft(phi.values, shape);
    const double scale = 1.0 / (grid.cell_volume() * static_cast<double>(grid.size()));
    if (grid.dim() == 1) {
        const auto ph = origin_phase(grid.axis(0));
        for (std::size_t k = 0; k < data.size(); ++k) data[k] *= std::conj(ph[k]) * scale;
    } else {
        const auto ph0 = origin_phase(grid.axis(0));
        const auto ph1 = origin_phase(grid.axis(1));
        const std::size_t n1 = shape[1];
        for (std::size_t a = 0; a < shape[0]; ++a)
            for (std::size_t b = 0; b < n1; ++b) data[a * n1 + b] *= std::conj(ph0[a] * ph1[b]) * scale;
    }
    fft_inplace(data, shape, FftDirection::Backward);
    return Wavefunction(grid, phi.eps, std::move(data));
}

cplx eps_fourier_at(const Wavefunction& psi, const Coord& p) {
    const auto& g = psi.grid;
    cplx s{};
    for (std::size_t j = 0; j < g.size(); ++j) {
        const Coord x = g.point(j);
        double phase = 0.0;
        for (int d = 0; d < g.dim(); ++d) phase += p[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
        s += psi.values[j] * std::polar(1.0, -phase / psi.eps);
    }
    return s * g.cell_volume();
}

double spectral_band_mass(const Wavefunction& psi, double band) {
    const auto& g = psi.grid;
    const auto shape = shape_of(g);
    std::vector<cplx> data = psi.values;
    fft_inplace(data, shape, FftDirection::Forward);
    double total = 0.0, outer = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double m = std::norm(data[i]);
        total += m;
        std::size_t rem = i;
        bool out = false;
        for (int d = g.dim() - 1; d >= 0; --d) {
            const std::size_t n = shape[static_cast<std::size_t>(d)];
            const long k = signed_frequency(rem % n, n);
            rem /= n;
            if (static_cast<double>(std::labs(k)) >= band * static_cast<double>(n / 2)) out = true;
        }
        if (out) outer += m;
    }
    return total > 0.0 ? outer / total : 0.0;
}

double boundary_mass(const Wavefunction& psi, double fraction) {
    const auto& g = psi.grid;
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const auto idx = g.unflatten(j);
        bool edge = false;
        for (int d = 0; d < g.dim(); ++d) {
            const auto n = g.axis(d).count;
            const auto strip = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
            const auto i = idx[static_cast<std::size_t>(d)];
            if (i < strip || i >= n - strip) edge = true;
        }
        if (edge) s += std::norm(psi.values[j]);
    }
    return s * g.cell_volume();
}

double tail_mass(const Wavefunction& psi, double radius) {
    const auto& g = psi.grid;
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const Coord x = g.point(j);
        if (x[0] * x[0] + x[1] * x[1] > radius * radius) s += std::norm(psi.values[j]);
    }
    return s * g.cell_volume();
}

Coord mean_position(const Wavefunction& psi) {
    const auto& g = psi.grid;
    Coord m{0.0, 0.0};
    double w = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const Coord x = g.point(j);
        const double r = std::norm(psi.values[j]);
        m[0] += r * x[0];
        m[1] += r * x[1];
        w += r;
    }
    m[0] /= w;
    m[1] /= w;
    return m;
}

std::vector<cplx> coherent_profile(const SpatialGrid& grid, double eps, const Coord& y, const Coord& p) {
    const int n = grid.dim();
    const double amp = std::pow(eps, -0.5 * n) * std::pow(kPi * eps, -0.25 * n);
    std::vector<cplx> v(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const Coord x = grid.point(j);
        double r2 = 0.0, ph = 0.0;
        for (int d = 0; d < n; ++d) {
            const auto u = static_cast<std::size_t>(d);
            r2 += (x[u] - y[u]) * (x[u] - y[u]);
            ph += p[u] * x[u];
        }
        v[j] = amp * std::exp(-r2 / (2.0 * eps)) * std::polar(1.0, ph / eps);
    }
    return v;
}

CoherentState coherent_state(const SpatialGrid& grid, double eps, const Coord& y, const Coord& p) {
    require(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    const double margin = 5.0 * std::sqrt(eps);
    require(grid.contains(y, margin), ErrorKind::OutOfBox, "coherent state centre too close to the box boundary");
    const double pmax = nyquist_momentum(grid, eps);
    for (int d = 0; d < grid.dim(); ++d)
        require(std::abs(p[static_cast<std::size_t>(d)]) + margin <= pmax, ErrorKind::OutOfBox,
                "coherent state momentum outside the resolved momentum range");
    Wavefunction raw(grid, eps, coherent_profile(grid, eps, y, p));
    const double raw_norm = raw.norm();
    return CoherentState{normalize(std::move(raw)), raw_norm};
}

double Envelope::profile_1d(double u) const {
    const double s = u / radius;
    if (kind == EnvelopeKind::Gaussian) return std::exp(-0.5 * s * s);
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double Envelope::operator()(const Coord& u, int n) const {
    double v = 1.0;
    for (int d = 0; d < n; ++d) v *= profile_1d(u[static_cast<std::size_t>(d)]);
    return v;
}

double Envelope::effective_radius() const {
    // exp(-s^2/2) < 1e-17 beyond s = 8.85.
    return kind == EnvelopeKind::Gaussian ? 8.85 * radius : radius;
}

WavePacket wave_packet(const SpatialGrid& grid, double eps, double alpha, const Coord& x0, const Coord& p0,
                       const Envelope& envelope) {
    require(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::InvalidArgument, "alpha must lie in [0, 1]");
    const double scale = std::pow(eps, alpha);
    const int n = grid.dim();
    require(grid.contains(x0, scale * envelope.effective_radius()), ErrorKind::OutOfBox,
            "scaled packet support leaks out of the box");
    Wavefunction psi(grid, eps);
    const double amp = std::pow(eps, -0.5 * n * alpha);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const Coord x = grid.point(j);
        Coord u{0.0, 0.0};
        double ph = 0.0;
        for (int d = 0; d < n; ++d) {
            const auto k = static_cast<std::size_t>(d);
            u[k] = (x[k] - x0[k]) / scale;
            ph += x[k] * p0[k];
        }
        psi.values[j] = amp * envelope(u, n) * std::polar(1.0, ph / eps);
    }
    return WavePacket{normalize(std::move(psi)), x0, p0, alpha};
}

void write_dump(const std::filesystem::path& path, const Wavefunction& psi) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::InvalidArgument, "cannot open " + path.string());
    os.write("SCLB", 4);
    put<std::uint32_t>(os, kDumpVersionWavefunction);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(psi.grid.dim()));
    for (const auto& a : psi.grid.axes()) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(a.count));
        put<double>(os, a.lo);
        put<double>(os, a.hi);
    }
    put<double>(os, psi.eps);
    for (const auto& v : psi.values) {
        put<double>(os, v.real());
        put<double>(os, v.imag());
    }
}

Wavefunction read_dump(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorKind::InvalidArgument, "cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    require(is && std::memcmp(magic, "SCLB", 4) == 0, ErrorKind::InvalidArgument, "bad dump magic");
    const auto version = get<std::uint32_t>(is);
    require(version == kDumpVersionWavefunction, ErrorKind::InvalidArgument, "not a wavefunction dump");
    const auto n = get<std::uint32_t>(is);
    require(n == 1 || n == 2, ErrorKind::InvalidArgument, "bad dump dimension");
    std::vector<Axis> axes;
    for (std::uint32_t d = 0; d < n; ++d) {
        Axis a;
        a.count = get<std::uint32_t>(is);
        a.lo = get<double>(is);
        a.hi = get<double>(is);
        axes.push_back(a);
    }
    const double eps = get<double>(is);
    SpatialGrid grid(std::move(axes));
    std::vector<cplx> values(grid.size());
    for (auto& v : values) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        v = {re, im};
    }
    return Wavefunction(std::move(grid), eps, std::move(values));
}

}  // namespace sclab

#include "sclab/test_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sclab/error.hpp"
#include "sclab/fft.hpp"
#include "sclab/potential.hpp"

namespace sclab {

namespace {

constexpr int kHalfNodes = 1024;  // trapezoid nodes per unit length on [-1, 1]

const std::vector<double>& bump_samples() {
    static const std::vector<double> samples = [] {
        std::vector<double> s(kHalfNodes + 1);
        for (int j = 0; j <= kHalfNodes; ++j) s[static_cast<std::size_t>(j)] = bump(static_cast<double>(j) / kHalfNodes);
        return s;
    }();
    return samples;
}

// |b_hat| on xi_m = m * step from one zero-padded FFT of the bump samples.
struct TransformTable {
    double step = 0.0;
    std::vector<double> magnitude;
};

const TransformTable& transform_table() {
    static const TransformTable table = [] {
        const std::size_t padded = std::size_t{1} << 19;
        const double h = 1.0 / kHalfNodes;
        const auto& b = bump_samples();
        std::vector<cplx> data(padded, cplx(0.0, 0.0));
        data[0] = b[0];
        for (int j = 1; j < kHalfNodes; ++j) {
            data[static_cast<std::size_t>(j)] = b[static_cast<std::size_t>(j)];
            data[padded - static_cast<std::size_t>(j)] = b[static_cast<std::size_t>(j)];
        }
        const std::vector<std::size_t> shape{padded};
        fft_inplace(data, shape, FftDirection::Forward);
        TransformTable t;
        t.step = 2.0 * std::numbers::pi / (static_cast<double>(padded) * h);
        // Keep xi <= 3000; |b_hat| is below 1e-20 beyond.
        const auto count = static_cast<std::size_t>(3000.0 / t.step);
        t.magnitude.resize(count);
        for (std::size_t m = 0; m < count; ++m) t.magnitude[m] = std::abs(data[m].real()) * h;
        return t;
    }();
    return table;
}

double gaussian_smoothed_bump(double z, double centre, double radius, double eps) {
    // int b((t - c)/r) (pi eps)^{-1/2} exp(-(z - t)^2 / eps) dt over the support.
    constexpr int nodes = 2048;
    const double h = 2.0 * radius / nodes;
    const double norm = 1.0 / std::sqrt(std::numbers::pi * eps);
    double s = 0.0;
    for (int j = 1; j < nodes; ++j) {
        const double t = centre - radius + j * h;
        const double d = z - t;
        const double e = d * d / eps;
        if (e > 745.0) continue;
        s += bump((t - centre) / radius) * std::exp(-e);
    }
    return s * h * norm;
}

}  // namespace

double bump(double u) {
    const double a = 1.0 - u * u;
    if (a <= 0.0) return 0.0;
    return std::exp(1.0 - 1.0 / a);
}

double bump_derivative(double u) {
    const double a = 1.0 - u * u;
    if (a <= 0.0) return 0.0;
    return bump(u) * (-2.0 * u / (a * a));
}

double bump_transform(double xi) {
    const auto& b = bump_samples();
    double s = b[0];
    for (int j = 1; j < kHalfNodes; ++j) s += 2.0 * b[static_cast<std::size_t>(j)] * std::cos(xi * j / kHalfNodes);
    return s / kHalfNodes;
}

double BumpFactor::operator()(const Coord& z, int n) const {
    double v = 1.0;
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        v *= bump((z[k] - centre[k]) / radius[k]);
        if (v == 0.0) break;
    }
    return v;
}

Coord BumpFactor::gradient(const Coord& z, int n) const {
    Coord u{0.0, 0.0}, b{1.0, 1.0};
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        u[k] = (z[k] - centre[k]) / radius[k];
        b[k] = bump(u[k]);
    }
    Coord g{0.0, 0.0};
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        double v = bump_derivative(u[k]) / radius[k];
        for (int e = 0; e < n; ++e)
            if (e != d) v *= b[static_cast<std::size_t>(e)];
        g[k] = v;
    }
    return g;
}

std::complex<double> BumpFactor::fourier(const Coord& y, int n) const {
    std::complex<double> v(1.0, 0.0);
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        v *= radius[k] * bump_transform(radius[k] * y[k]) * std::polar(1.0, -centre[k] * y[k]);
    }
    return v;
}

double BumpFactor::smoothed(const Coord& z, int n, double eps) const {
    double v = 1.0;
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        v *= gaussian_smoothed_bump(z[k], centre[k], radius[k], eps);
    }
    return v;
}

Coord TestFunction::grad_x(const Coord& x, const Coord& p) const {
    const double f = coefficient * p_factor(p, n);
    Coord g = x_factor.gradient(x, n);
    return {g[0] * f, g[1] * f};
}

Coord TestFunction::grad_p(const Coord& x, const Coord& p) const {
    const double f = coefficient * x_factor(x, n);
    Coord g = p_factor.gradient(p, n);
    return {g[0] * f, g[1] * f};
}

std::complex<double> TestFunction::fourier_p(const Coord& x, const Coord& y) const {
    const double a = phi1(x);
    if (a == 0.0) return {0.0, 0.0};
    return a * p_factor.fourier(y, n);
}

bool TestFunction::x_support_inside(const SpatialGrid& box) const {
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        const auto& a = box.axis(d);
        if (x_factor.centre[k] - x_factor.radius[k] <= a.lo || x_factor.centre[k] + x_factor.radius[k] >= a.hi) return false;
    }
    return true;
}

double TestFunction::x_support_distance_to_singular_set(const Potential& pot) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& pr : pot.pairs()) {
        const auto i = static_cast<std::size_t>(pr.i), j = static_cast<std::size_t>(pr.j);
        const double gap = std::abs(x_factor.centre[i] - x_factor.centre[j]) - (x_factor.radius[i] + x_factor.radius[j]);
        d = std::min(d, std::max(0.0, gap) / std::numbers::sqrt2);
    }
    return d;
}

double transform_weighted_integral(const BumpFactor& p_factor, int n, const std::function<double(double)>& weight) {
    require(n == 1 || n == 2, ErrorKind::InvalidArgument, "dimension must be 1 or 2");
    const auto& t = transform_table();
    if (n == 1) {
        const double r = p_factor.radius[0];
        double s = 0.5 * t.magnitude[0] * weight(0.0);
        for (std::size_t m = 1; m < t.magnitude.size(); ++m)
            s += t.magnitude[m] * weight(static_cast<double>(m) * t.step / r);
        return 2.0 * s * t.step;
    }
    // Coarser lattice for the double sum; |b_hat| < 1e-8 beyond xi = 300.
    constexpr std::size_t stride = 4;
    const double step = t.step * stride;
    const auto count = static_cast<std::size_t>(300.0 / step);
    std::vector<double> mag(count);
    for (std::size_t m = 0; m < count; ++m) mag[m] = t.magnitude[m * stride] * (m == 0 ? 0.5 : 1.0);
    const double r1 = p_factor.radius[0], r2 = p_factor.radius[1];
    double s = 0.0;
    for (std::size_t a = 0; a < count; ++a) {
        if (mag[a] < 1e-18) continue;
        const double y1 = static_cast<double>(a) * step / r1;
        double row = 0.0;
        for (std::size_t b = 0; b < count; ++b) {
            const double y2 = static_cast<double>(b) * step / r2;
            row += mag[b] * weight(std::hypot(y1, y2));
        }
        s += mag[a] * row;
    }
    return 4.0 * s * step * step;
}

double a_norm(const TestFunction& phi) {
    static const double l1 = transform_weighted_integral(BumpFactor{}, 1, [](double) { return 1.0; });
    return std::abs(phi.coefficient) * std::pow(l1, phi.n);
}

double first_moment_norm(const TestFunction& phi) {
    if (phi.n == 1) {
        static const double m1 = transform_weighted_integral(BumpFactor{}, 1, [](double y) { return y; });
        return std::abs(phi.coefficient) * m1 / phi.p_factor.radius[0];
    }
    return std::abs(phi.coefficient) * transform_weighted_integral(phi.p_factor, 2, [](double y) { return y; });
}

double a_norm_smoothing_defect(const TestFunction& phi, double eps) {
    require(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    const int n = phi.n;
    // Samples of phi1 and phi1 * G over the support widened by 6 sqrt(eps).
    constexpr int per_axis = 401;
    std::vector<double> ax[2];
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        const double w = phi.x_factor.radius[k] + 6.0 * std::sqrt(eps);
        for (int i = 0; i < per_axis; ++i) ax[k].push_back(phi.x_factor.centre[k] - w + 2.0 * w * i / (per_axis - 1));
    }
    std::vector<double> f, s;
    const std::size_t n2 = n == 2 ? per_axis : 1;
    std::vector<double> s1[2];
    for (int d = 0; d < n; ++d) {
        const auto k = static_cast<std::size_t>(d);
        for (double z : ax[k]) s1[k].push_back(gaussian_smoothed_bump(z, phi.x_factor.centre[k], phi.x_factor.radius[k], eps));
    }
    for (std::size_t i = 0; i < per_axis; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            Coord x{ax[0][i], n == 2 ? ax[1][j] : 0.0};
            f.push_back(phi.x_factor(x, n));
            s.push_back(s1[0][i] * (n == 2 ? s1[1][j] : 1.0));
        }
    // h(g) = sup_x |phi1 - g phi1*G| is piecewise linear in g; tabulate it.
    constexpr int levels = 257;
    std::vector<double> h(levels);
    for (int l = 0; l < levels; ++l) {
        const double g = static_cast<double>(l) / (levels - 1);
        double m = 0.0;
        for (std::size_t q = 0; q < f.size(); ++q) m = std::max(m, std::abs(f[q] - g * s[q]));
        h[static_cast<std::size_t>(l)] = m;
    }
    auto weight = [&](double y) {
        const double g = std::exp(-0.25 * eps * y * y) * (levels - 1);
        const auto l = std::min(static_cast<std::size_t>(g), static_cast<std::size_t>(levels - 2));
        const double frac = g - static_cast<double>(l);
        return h[l] * (1.0 - frac) + h[l + 1] * frac;
    };
    return std::abs(phi.coefficient) * transform_weighted_integral(phi.p_factor, n, weight);
}

}  // namespace sclab

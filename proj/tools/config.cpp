#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sclab::cli {

namespace {

std::string join(const std::vector<std::string>& path) {
    std::string s;
    for (const auto& p : path) s += (s.empty() ? "" : ".") + p;
    return s;
}

}  // namespace

Source Source::load(const std::filesystem::path& path) {
    Source s;
    s.name_ = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Config, s.name_ + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    s.text_ = ss.str();
    try {
        s.doc_ = json::parse(s.text_);
    } catch (const json::parse_error& e) {
        int line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, s.text_.size()); ++i)
            if (s.text_[i] == '\n') ++line;
        throw Error(ErrorKind::Config, s.name_ + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
    }
    if (!s.doc_.is_object()) throw Error(ErrorKind::Config, s.name_ + ":1: top level must be a JSON object");
    return s;
}

int Source::line_of(const std::vector<std::string>& path) const {
    std::size_t pos = 0;
    for (const auto& key : path) {
        const std::string quoted = "\"" + key + "\"";
        std::size_t at = pos;
        bool found = false;
        while ((at = text_.find(quoted, at)) != std::string::npos) {
            std::size_t k = at + quoted.size();
            while (k < text_.size() && std::isspace(static_cast<unsigned char>(text_[k]))) ++k;
            if (k < text_.size() && text_[k] == ':') {
                found = true;
                break;
            }
            at += quoted.size();
        }
        if (!found) break;
        pos = at;
    }
    int line = 1;
    for (std::size_t i = 0; i < pos && i < text_.size(); ++i)
        if (text_[i] == '\n') ++line;
    return line;
}

void Source::fail(const std::vector<std::string>& path, const std::string& message) const {
    throw Error(ErrorKind::Config, name_ + ":" + std::to_string(line_of(path)) + ": " + message);
}

Section::Section(const Source& src, const json& node, std::vector<std::string> path, json& resolved)
    : src_(&src), node_(node), path_(std::move(path)), resolved_(resolved) {
    if (!node_.is_object()) src_->fail(path_, "'" + join(path_) + "' must be a JSON object");
    if (!resolved_.is_object()) resolved_ = json::object();
}

std::string Section::where() const { return path_.empty() ? "" : " in '" + join(path_) + "'"; }

std::vector<std::string> Section::sub(const std::string& key) const {
    auto p = path_;
    p.push_back(key);
    return p;
}

void Section::fail(const std::string& key, const std::string& message) const { src_->fail(sub(key), message); }

Section Section::child(const std::string& key) {
    seen_.insert(key);
    json& r = resolved_[key];
    r = json::object();
    return Section(*src_, node_.contains(key) ? node_.at(key) : json::object(), sub(key), r);
}

std::vector<Section> Section::children(const std::string& key) {
    seen_.insert(key);
    std::vector<Section> out;
    json& r = resolved_[key];
    r = json::array();
    if (!node_.contains(key)) return out;
    const json& arr = node_.at(key);
    if (!arr.is_array()) fail(key, "key '" + key + "'" + where() + " must be an array of objects");
    for (std::size_t i = 0; i < arr.size(); ++i) r.push_back(json::object());
    for (std::size_t i = 0; i < arr.size(); ++i) out.emplace_back(*src_, arr[i], sub(key), r[i]);
    return out;
}

Coord Section::coord(const std::string& key, int n, const Coord& fallback) {
    if (!node_.contains(key)) {
        seen_.insert(key);
        std::vector<double> v(fallback.begin(), fallback.begin() + n);
        resolved_[key] = v;
        return fallback;
    }
    return require_coord(key, n);
}

Coord Section::require_coord(const std::string& key, int n) {
    const auto v = require<std::vector<double>>(key);
    if (static_cast<int>(v.size()) != n)
        fail(key, "key '" + key + "'" + where() + " needs " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
    Coord c{0.0, 0.0};
    for (int d = 0; d < n; ++d) c[static_cast<std::size_t>(d)] = v[static_cast<std::size_t>(d)];
    return c;
}

void Section::finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
        if (!seen_.count(it.key())) src_->fail(sub(it.key()), "unknown key '" + it.key() + "'" + where());
}

Potential parse_potential(Section s, int n) {
    auto b = s.child("bounded");
    BoundedPart part;
    try {
        part.kind = bounded_kind_from_string(b.get<std::string>("kind", "zero"));
    } catch (const Error& e) {
        b.fail("kind", e.what());
    }
    part.omega = b.get("omega", part.omega);
    part.amplitude = b.get("amplitude", part.amplitude);
    part.wavenumber = b.get("wavenumber", part.wavenumber);
    part.depth = b.get("depth", part.depth);
    part.width = b.get("width", part.width);
    part.slope = b.coord("slope", n, part.slope);
    b.finish();
    const auto charges = s.get<std::vector<double>>("charges", {});
    const double softening = s.get("softening", 0.0);
    s.finish();
    try {
        if (charges.empty()) return Potential(n, part);
        return Potential(n, part, charges, softening);
    } catch (const Error& e) {
        s.fail("charges", e.what());
    }
}

SpatialGrid parse_grid(Section s, int n) {
    const double lo = s.get("lo", -8.0), hi = s.get("hi", 8.0);
    const auto points = s.get<std::size_t>("points", 256);
    const bool staggered = s.get("staggered", false);
    s.finish();
    if (!(hi > lo)) s.fail("hi", "grid needs hi > lo");
    if (points < 2) s.fail("points", "grid needs at least 2 points per axis");
    return staggered ? SpatialGrid::staggered(n, points, lo, hi) : SpatialGrid::cube(n, points, lo, hi);
}

PropagatorConfig parse_propagator(Section s) {
    PropagatorConfig c;
    c.dt = s.get("dt", c.dt);
    c.tail_tolerance = s.get("tail_tolerance", c.tail_tolerance);
    c.boundary_fraction = s.get("boundary_fraction", c.boundary_fraction);
    c.nyquist_tolerance = s.get("nyquist_tolerance", c.nyquist_tolerance);
    c.nyquist_band = s.get("nyquist_band", c.nyquist_band);
    c.tail_radii = s.get("tail_radii", c.tail_radii);
    s.finish();
    return c;
}

HusimiOptions parse_husimi(Section s, const HusimiOptions& defaults) {
    HusimiOptions h = defaults;
    h.stride = s.get("stride", h.stride);
    h.window = s.get("window", h.window);
    h.window_sigmas = s.get("window_sigmas", h.window_sigmas);
    h.skip_below = s.get("skip_below", h.skip_below);
    h.stride_sigmas = s.get("stride_sigmas", h.stride_sigmas);
    h.compact_window = s.get("compact_window", h.compact_window);
    s.finish();
    return h;
}

WignerOptions parse_wigner(Section s) {
    WignerOptions w;
    w.check = s.get("check", w.check);
    w.tail_tolerance = s.get("tail_tolerance", w.tail_tolerance);
    w.boundary_fraction = s.get("boundary_fraction", w.boundary_fraction);
    w.nyquist_tolerance = s.get("nyquist_tolerance", w.nyquist_tolerance);
    s.finish();
    return w;
}

FlowConfig parse_flow(Section s) {
    FlowConfig f;
    f.h = s.get("h", f.h);
    f.r_guard = s.get("r_guard", f.r_guard);
    if (s.has("energy_cutoff")) f.energy_cutoff = s.get("energy_cutoff", f.energy_cutoff);
    else s.get<std::string>("energy_cutoff", "none");
    f.cutoff_step_factor = s.get("cutoff_step_factor", f.cutoff_step_factor);
    f.beta = s.get("beta", f.beta);
    f.max_steps = s.get("max_steps", f.max_steps);
    s.finish();
    return f;
}

Envelope parse_envelope(Section s) {
    Envelope e{EnvelopeKind::Gaussian, 1.0};
    const auto kind = s.get<std::string>("kind", "gaussian");
    if (kind == "gaussian") e.kind = EnvelopeKind::Gaussian;
    else if (kind == "bump") e.kind = EnvelopeKind::Bump;
    else s.fail("kind", "envelope kind must be 'gaussian' or 'bump', got '" + kind + "'");
    e.radius = s.get("radius", e.radius);
    if (!(e.radius > 0.0)) s.fail("radius", "envelope radius must be positive");
    s.finish();
    return e;
}

TestFunction parse_test_function(Section s, int n) {
    TestFunction t;
    t.n = n;
    t.coefficient = s.get("coefficient", 1.0);
    t.x_factor.centre = s.coord("x_centre", n, {0.0, 0.0});
    t.x_factor.radius = s.coord("x_radius", n, {1.0, 1.0});
    t.p_factor.centre = s.coord("p_centre", n, {0.0, 0.0});
    t.p_factor.radius = s.coord("p_radius", n, {1.0, 1.0});
    s.finish();
    for (int d = 0; d < n; ++d)
        if (!(t.x_factor.radius[static_cast<std::size_t>(d)] > 0.0 && t.p_factor.radius[static_cast<std::size_t>(d)] > 0.0))
            s.fail("x_radius", "test-function radii must be positive");
    return t;
}

LabelDensity parse_density(Section s, int n) {
    LabelDensity rho;
    try {
        rho.kind = density_kind_from_string(s.get<std::string>("kind", "uniform_box"));
    } catch (const Error& e) {
        s.fail("kind", e.what());
    }
    rho.box.n = n;
    rho.box.x_lo = s.coord("x_lo", n, {-1.0, -1.0});
    rho.box.x_hi = s.coord("x_hi", n, {1.0, 1.0});
    rho.box.p_lo = s.coord("p_lo", n, {-1.0, -1.0});
    rho.box.p_hi = s.coord("p_hi", n, {1.0, 1.0});
    rho.x_mean = s.coord("x_mean", n, {0.0, 0.0});
    rho.p_mean = s.coord("p_mean", n, {0.0, 0.0});
    rho.sigma = s.get("sigma", rho.sigma);
    s.finish();
    try {
        rho.validate();
    } catch (const Error& e) {
        s.fail("kind", e.what());
    }
    return rho;
}

RandomFamily parse_family(Section s, int n, std::uint64_t seed) {
    RandomFamily f;
    f.n = n;
    f.seed = seed;
    f.alpha = s.get("alpha", f.alpha);
    f.samples = s.get("samples", f.samples);
    f.cloud = s.get("cloud", f.cloud);
    f.envelope = parse_envelope(s.child("envelope"));
    f.rho = parse_density(s.child("density"), n);
    s.finish();
    if (f.alpha < 0.0 || f.alpha > 1.0) s.fail("alpha", "alpha must lie in [0, 1]");
    if (f.samples == 0) s.fail("samples", "need at least one sample");
    return f;
}

ExperimentConfig parse_experiment(Section s) {
    ExperimentConfig c;
    c.box_lo = s.get("box_lo", c.box_lo);
    c.box_hi = s.get("box_hi", c.box_hi);
    c.box_growth = s.get("box_growth", c.box_growth);
    c.spread_sigmas = s.get("spread_sigmas", c.spread_sigmas);
    c.staggered = s.get("staggered", c.staggered);
    c.momentum_reach = s.get("momentum_reach", c.momentum_reach);
    c.min_points = s.get("min_points", c.min_points);
    c.grid_band = s.get("grid_band", c.grid_band);
    c.time_samples = s.get("time_samples", c.time_samples);
    c.dt_eps_factor = s.get("dt_eps_factor", c.dt_eps_factor);
    c.dictionary_size = s.get("dictionary_size", c.dictionary_size);
    c.dictionary_seed = s.get("dictionary_seed", c.dictionary_seed);
    c.max_harmonic = s.get("max_harmonic", c.max_harmonic);
    c.integrability_radius = s.get("integrability_radius", c.integrability_radius);
    c.beta = s.get("beta", c.beta);
    c.max_exclusion = s.get("max_exclusion", c.max_exclusion);
    s.finish();
    if (!(c.box_hi > c.box_lo)) s.fail("box_hi", "experiment box needs box_hi > box_lo");
    if (c.time_samples < 2) s.fail("time_samples", "need at least 2 time samples");
    return c;
}

InitialState parse_initial(Section s, int n) {
    InitialState init;
    init.kind = s.get<std::string>("kind", init.kind);
    if (init.kind != "coherent" && init.kind != "packet") s.fail("kind", "initial kind must be 'coherent' or 'packet', got '" + init.kind + "'");
    init.x0 = s.coord("x0", n, init.x0);
    init.p0 = s.coord("p0", n, init.p0);
    if (init.kind == "packet") {
        init.alpha = s.get("alpha", init.alpha);
        init.envelope = parse_envelope(s.child("envelope"));
    }
    s.finish();
    return init;
}

Wavefunction make_initial(const InitialState& init, const SpatialGrid& grid, double eps) {
    if (init.kind == "coherent") return coherent_state(grid, eps, init.x0, init.p0).psi;
    return wave_packet(grid, eps, init.alpha, init.x0, init.p0, init.envelope).psi;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void flatten(const json& node, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
    if (node.is_object()) {
        for (auto it = node.begin(); it != node.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
        return;
    }
    if (node.is_array() && !node.empty() && node.front().is_object()) {
        for (std::size_t i = 0; i < node.size(); ++i) flatten(node[i], prefix + "." + std::to_string(i), out);
        return;
    }
    std::string v;
    if (node.is_array()) {
        v = "[";
        for (std::size_t i = 0; i < node.size(); ++i) {
            if (i) v += ", ";
            v += node[i].is_number_float() ? format_number(node[i].get<double>()) : node[i].dump();
        }
        v += "]";
    } else if (node.is_string()) {
        v = node.get<std::string>();
    } else if (node.is_number_float()) {
        v = format_number(node.get<double>());
    } else {
        v = node.dump();
    }
    out.emplace_back(prefix, v);
}

}  // namespace sclab::cli

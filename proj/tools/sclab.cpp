// Command-line driver: propagate, wigner, classical, errorterms, converge, selftest.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "checks.hpp"
#include "config.hpp"
#include "sclab/error_terms.hpp"
#include "sclab/parallel.hpp"

namespace fs = std::filesystem;
using namespace sclab;
using namespace sclab::cli;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitGuard = 3;
constexpr int kExitSelftest = 4;

struct Options {
    std::string config;
    std::string out = "sclab_out";
    unsigned threads = 0;
    std::optional<std::uint64_t> seed_override;
    bool full = false;
};

// Output directory plus the manifest entries collected during a run.
struct Run {
    std::string subcommand;
    Options opts;
    json resolved = json::object();
    std::vector<std::pair<std::string, std::string>> derived;

    fs::path path(const std::string& name) const { return fs::path(opts.out) / name; }
    void note(const std::string& key, const std::string& value) { derived.emplace_back(key, value); }
    void note(const std::string& key, double value) { note(key, format_number(value)); }

    void write_manifest() const {
        std::ofstream out(path("manifest.txt"));
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        out << "timestamp = " << stamp << "\n";
        out << "subcommand = " << subcommand << "\n";
        out << "config_file = " << (opts.config.empty() ? "none" : opts.config) << "\n";
        out << "threads = " << thread_count() << "\n";
        out << "seed_override = " << (opts.seed_override ? std::to_string(*opts.seed_override) : "none") << "\n";
        std::vector<std::pair<std::string, std::string>> flat;
        flatten(resolved, "config", flat);
        for (const auto& [k, v] : flat) out << k << " = " << v << "\n";
        for (const auto& [k, v] : derived) out << k << " = " << v << "\n";
    }
};

FILE* open_csv(const fs::path& p) {
    FILE* f = std::fopen(p.string().c_str(), "w");
    require(f != nullptr, ErrorKind::InvalidArgument, "cannot write " + p.string());
    return f;
}

std::string g17(double v) { return format_number(v); }

int dimension(Section& top) {
    const int n = top.get("dimension", 1);
    if (n != 1 && n != 2) top.fail("dimension", "dimension must be 1 or 2");
    return n;
}

std::uint64_t seed(Section& top, const Options& o) {
    const auto s = top.get<std::uint64_t>("seed", 1);
    return o.seed_override ? *o.seed_override : s;
}

double positive(Section& top, const std::string& key) {
    const double v = top.require<double>(key);
    if (!(v > 0.0)) top.fail(key, "'" + key + "' must be positive");
    return v;
}

std::vector<double> ladder(Section& top) {
    const auto l = top.require<std::vector<double>>("eps_ladder");
    if (l.empty()) top.fail("eps_ladder", "'eps_ladder' must not be empty");
    for (double e : l)
        if (!(e > 0.0)) top.fail("eps_ladder", "every entry of 'eps_ladder' must be positive");
    return l;
}

void write_diagnostics_row(FILE* f, const QuantumDiagnostics& d) {
    std::fprintf(f, "%s,%s,%s,%s,%s,%s,%s", g17(d.t).c_str(), g17(d.mass).c_str(), g17(d.energy).c_str(), g17(d.h_norm2).c_str(),
                 g17(d.coulomb_moment).c_str(), g17(d.boundary).c_str(), g17(d.spectral_outer).c_str());
    for (double v : d.tail) std::fprintf(f, ",%s", g17(v).c_str());
    std::fprintf(f, "\n");
}

void cmd_propagate(Run& run, const Source& src) {
    Section top(src, src.document(), {}, run.resolved);
    const int n = dimension(top);
    const double eps = positive(top, "eps");
    const double T = top.require<double>("T");
    const auto samples = top.get<std::size_t>("time_samples", 16);
    const bool dump = top.get("dump_states", true);
    const auto grid = parse_grid(top.child("grid"), n);
    const auto pot = parse_potential(top.child("potential"), n);
    const auto init = parse_initial(top.child("initial"), n);
    const auto cfg = parse_propagator(top.child("propagator"));
    top.finish();
    if (T < 0.0) top.fail("T", "'T' must be non-negative");
    if (samples < 2) top.fail("time_samples", "need at least 2 time samples");

    const auto psi0 = make_initial(init, grid, eps);
    if (dump) fs::create_directories(run.path("states"));
    const auto traj = propagate(psi0, pot, T, samples, cfg, false, [&](std::size_t i, double, const Wavefunction& psi) {
        if (dump) {
            char name[32];
            std::snprintf(name, sizeof name, "psi_%05zu.bin", i);
            write_dump(run.path("states") / name, psi);
        }
    });
    FILE* f = open_csv(run.path("diagnostics.csv"));
    std::fprintf(f, "t,mass,energy,h_norm2,coulomb_moment,boundary,spectral_outer");
    for (double r : cfg.tail_radii) std::fprintf(f, ",tail_%s", g17(r).c_str());
    std::fprintf(f, "\n");
    for (const auto& d : traj.diagnostics) write_diagnostics_row(f, d);
    std::fclose(f);
    run.note("derived.dt", traj.dt);
    run.note("derived.steps", std::to_string(traj.steps));
    run.note("derived.potential", pot.describe());
}

void write_marginal_csv(const fs::path& path, const std::vector<Axis>& axes, const std::vector<double>& marginal,
                        const std::vector<double>& reference, const char* coord, const char* ref_name) {
    FILE* f = open_csv(path);
    const int n = static_cast<int>(axes.size());
    for (int d = 0; d < n; ++d) std::fprintf(f, "%s%d,", coord, d + 1);
    std::fprintf(f, "marginal,%s,abs_error\n", ref_name);
    for (std::size_t i = 0; i < marginal.size(); ++i) {
        const Coord c = axes_node(axes, i);
        for (int d = 0; d < n; ++d) std::fprintf(f, "%s,", g17(c[static_cast<std::size_t>(d)]).c_str());
        std::fprintf(f, "%s,%s,%s\n", g17(marginal[i]).c_str(), g17(reference[i]).c_str(), g17(std::abs(marginal[i] - reference[i])).c_str());
    }
    std::fclose(f);
}

double max_error(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void cmd_wigner(Run& run, const Source& src) {
    Section top(src, src.document(), {}, run.resolved);
    const int n = dimension(top);
    const double eps = positive(top, "eps");
    const double T = top.get("T", 0.0);
    const auto grid = parse_grid(top.child("grid"), n);
    const auto pot = parse_potential(top.child("potential"), n);
    const auto init = parse_initial(top.child("initial"), n);
    const auto pcfg = parse_propagator(top.child("propagator"));
    const auto wopt = parse_wigner(top.child("wigner"));
    const auto hopt = parse_husimi(top.child("husimi"));
    std::vector<TestFunction> phis;
    for (auto& s : top.children("test_functions")) phis.push_back(parse_test_function(s, n));
    top.finish();
    if (T < 0.0) top.fail("T", "'T' must be non-negative");

    auto psi = make_initial(init, grid, eps);
    if (T > 0.0) psi = propagate(psi, pot, T, 2, pcfg, true).states.back();
    const auto w = wigner(psi, wopt);
    const auto h = husimi(psi, hopt);
    write_dump(run.path("wigner.bin"), w);
    write_dump(run.path("husimi.bin"), h);
    const auto wx = x_marginal(w), wp = p_marginal(w), hx = x_marginal(h), hp = p_marginal(h);
    const auto rx = position_density(psi), rp = momentum_density(psi, w.p_axes);
    const auto sx = smoothed_position_density(psi, h.x_axes), sp = smoothed_momentum_density(psi, h.p_axes);
    write_marginal_csv(run.path("wigner_x_marginal.csv"), w.x_axes, wx, rx, "x", "position_density");
    write_marginal_csv(run.path("wigner_p_marginal.csv"), w.p_axes, wp, rp, "p", "momentum_density");
    write_marginal_csv(run.path("husimi_x_marginal.csv"), h.x_axes, hx, sx, "x", "smoothed_position_density");
    write_marginal_csv(run.path("husimi_p_marginal.csv"), h.p_axes, hp, sp, "p", "smoothed_momentum_density");
    FILE* f = open_csv(run.path("pairings.csv"));
    std::fprintf(f, "index,field,value,bound,a_norm\n");
    for (std::size_t k = 0; k < phis.size(); ++k)
        for (const auto* field : {&w, &h}) {
            const auto r = pair(*field, phis[k]);
            std::fprintf(f, "%zu,%s,%s,%s,%s\n", k, to_string(field->kind).c_str(), g17(r.value).c_str(), g17(r.bound).c_str(), g17(r.a_norm).c_str());
        }
    std::fclose(f);
    run.note("derived.wigner_imag_residue", w.imag_residue);
    run.note("derived.wigner_min", w.min_value());
    run.note("derived.husimi_min", h.min_value());
    run.note("derived.husimi_stride_points", std::to_string(h.x_axes.front().count));
    run.note("derived.husimi_p_points", std::to_string(h.p_axes.front().count));
    run.note("derived.marginal_error.wigner_x", max_error(wx, rx));
    run.note("derived.marginal_error.wigner_p", max_error(wp, rp));
    run.note("derived.marginal_error.husimi_x", max_error(hx, sx));
    run.note("derived.marginal_error.husimi_p", max_error(hp, sp));
}

ParticleEnsemble parse_ensemble(Section s, int n, std::uint64_t seed) {
    const auto kind = s.get<std::string>("kind", "dirac");
    ParticleEnsemble mu;
    if (kind == "dirac") {
        const auto x = s.coord("x", n, {0.0, 0.0}), p = s.coord("p", n, {0.0, 0.0});
        mu = ParticleEnsemble::dirac(n, x, p);
    } else if (kind == "points") {
        std::vector<Coord> xs, ps;
        for (auto& pt : s.children("points")) {
            xs.push_back(pt.require_coord("x", n));
            ps.push_back(pt.require_coord("p", n));
            pt.finish();
        }
        if (xs.empty()) s.fail("points", "'points' must list at least one particle");
        mu = ParticleEnsemble::uniform(n, xs, ps);
    } else if (kind == "density") {
        const auto rho = parse_density(s.child("density"), n);
        const auto count = s.get<std::size_t>("count", 256);
        if (count == 0 || rho.kind == DensityKind::Dirac) s.fail("count", "a sampled ensemble needs count > 0 and a non-Dirac density");
        std::vector<Coord> xs(count), ps(count);
        for (std::size_t i = 0; i < count; ++i) {
            Rng rng(derive_seed(seed, i));
            rho.sample(rng, xs[i], ps[i]);
        }
        mu = ParticleEnsemble::uniform(n, xs, ps);
    } else {
        s.fail("kind", "ensemble kind must be 'dirac', 'points' or 'density', got '" + kind + "'");
    }
    s.finish();
    return mu;
}

void cmd_classical(Run& run, const Source& src) {
    Section top(src, src.document(), {}, run.resolved);
    const int n = dimension(top);
    const auto sd = seed(top, run.opts);
    const double T = positive(top, "T");
    const auto samples = top.get<std::size_t>("time_samples", 16);
    const double tube = top.get("tube", 0.05);
    const auto pot = parse_potential(top.child("potential"), n);
    const auto flow = parse_flow(top.child("flow"));
    const auto mu = parse_ensemble(top.child("ensemble"), n, sd);
    std::vector<TestFunction> phis;
    for (auto& s : top.children("test_functions")) phis.push_back(parse_test_function(s, n));
    auto integ = top.child("integrability");
    const double radius = integ.get("radius", 10.0);
    const double beta = integ.get("beta", flow.beta);
    const auto deltas = integ.get<std::vector<double>>("deltas", {1e-1, 1e-2, 1e-3, 1e-4});
    integ.finish();
    top.finish();
    if (samples < 2) top.fail("time_samples", "need at least 2 time samples");
    try {
        flow.validate();
    } catch (const Error& e) {
        top.fail("flow", e.what());
    }

    const auto path = push_forward(mu, pot, T, samples, flow);
    write_measure_path(run.path("ensembles"), path);
    FILE* f = open_csv(run.path("residual.csv"));
    std::fprintf(f, "index,residual\n");
    for (std::size_t k = 0; k < phis.size(); ++k)
        std::fprintf(f, "%zu,%s\n", k, g17(liouville_residual(path, pot, phis[k], TimeWindow{T}, tube)).c_str());
    std::fclose(f);
    const auto rep = dist_integrability(path, pot, radius, beta, deltas);
    f = open_csv(run.path("integrability.csv"));
    std::fprintf(f, "delta,value\n");
    std::fprintf(f, "0,%s\n", g17(rep.value).c_str());
    for (std::size_t i = 0; i < rep.deltas.size(); ++i) std::fprintf(f, "%s,%s\n", g17(rep.deltas[i]).c_str(), g17(rep.regularized[i]).c_str());
    std::fclose(f);
    run.note("derived.particles", std::to_string(mu.size()));
    run.note("derived.absorbed_mass_final", path.absorbed_mass.back());
    run.note("derived.integrability_excluded_mass", rep.excluded_mass);
}

void cmd_errorterms(Run& run, const Source& src) {
    Section top(src, src.document(), {}, run.resolved);
    const int n = dimension(top);
    const auto eps_list = ladder(top);
    const auto grid = parse_grid(top.child("grid"), n);
    const auto pot = parse_potential(top.child("potential"), n);
    const auto init = parse_initial(top.child("initial"), n);
    PairingOptions popt;
    popt.husimi = parse_husimi(top.child("husimi"));
    popt.tube = top.get("tube", popt.tube);
    const auto mode = top.get<std::string>("mode", pot.singular_enabled() && pot.bounded().kind == BoundedKind::Zero ? "coulomb_discrepancy" : "i_eps");
    std::vector<TestFunction> phis;
    for (auto& s : top.children("test_functions")) phis.push_back(parse_test_function(s, n));
    top.finish();
    if (mode != "i_eps" && mode != "coulomb_discrepancy") top.fail("mode", "mode must be 'i_eps' or 'coulomb_discrepancy'");
    if (phis.empty()) top.fail("test_functions", "'test_functions' must list at least one test function");

    for (std::size_t k = 0; k < phis.size(); ++k) {
        std::vector<ErrorPairing> rows;
        for (double eps : eps_list) {
            const auto psi = make_initial(init, grid, eps);
            rows.push_back(mode == "i_eps" ? pair_I_eps(pot, psi, phis[k], popt) : coulomb_discrepancy(psi, pot, phis[k], popt));
        }
        write_error_csv(run.path("errors_phi" + std::to_string(k) + ".csv"), rows);
    }
}

void write_operator_row(FILE* f, const char* stage, double t, const OperatorReport& r) {
    for (std::size_t l = 0; l < r.lambdas.size(); ++l)
        std::fprintf(f, "%s,%s,%s,%s,%s,%s,%s,%s\n", g17(r.eps).c_str(), stage, g17(t).c_str(), g17(r.lambdas[l]).c_str(),
                     g17(r.smoothed_sup[l]).c_str(), g17(r.implied_constant[l]).c_str(), g17(r.husimi_sup).c_str(), g17(r.husimi_stderr).c_str());
}

void cmd_converge(Run& run, const Source& src) {
    Section top(src, src.document(), {}, run.resolved);
    const int n = dimension(top);
    const auto sd = seed(top, run.opts);
    const auto eps_list = ladder(top);
    const double T = positive(top, "T");
    const auto pot = parse_potential(top.child("potential"), n);
    const auto family = parse_family(top.child("family"), n, sd);
    auto cfg = parse_experiment(top.child("experiment"));
    cfg.propagator = parse_propagator(top.child("propagator"));
    cfg.husimi = parse_husimi(top.child("husimi"), cfg.husimi);
    cfg.flow = parse_flow(top.child("flow"));
    auto diag = top.child("diagnostics");
    const bool want_operator = diag.get("operator", false);
    const bool want_time = diag.get("no_concentration", false);
    const bool want_tight = diag.get("tightness", false);
    const auto lambdas = diag.get<std::vector<double>>("lambdas", {1.0, 4.0});
    const auto radii = diag.get<std::vector<double>>("radii", {1.0, 2.0, 4.0});
    diag.finish();
    top.finish();
    if ((want_operator || want_time || want_tight) && n != 1)
        top.fail("diagnostics", "operator, no-concentration and tightness diagnostics store full phase-space fields and are limited to dimension 1");

    const auto rep = run_convergence_experiment(family, pot, T, eps_list, cfg);
    write_convergence_csv(run.path("convergence.csv"), rep);
    write_convergence_details_csv(run.path("convergence_details.csv"), rep);
    write_convergence_diagnostics_csv(run.path("convergence_diagnostics.csv"), rep);
    std::istringstream dict(rep.dictionary.describe());
    for (std::string line; std::getline(dict, line);) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) run.note("derived." + line.substr(0, eq), line.substr(eq + 3));
    }
    run.note("derived.D_decreasing", rep.decreasing() ? "true" : "false");

    if (want_operator || want_time || want_tight) {
        FILE* op = want_operator || want_time ? open_csv(run.path("operator_diagnostics.csv")) : nullptr;
        if (op) std::fprintf(op, "eps,stage,t,lambda,smoothed_sup,implied_constant,husimi_sup,husimi_stderr\n");
        FILE* tf = want_tight ? open_csv(run.path("tightness.csv")) : nullptr;
        if (tf) std::fprintf(tf, "eps,R,tail_initial,tail_sup,mean_energy,fitted_c,tails_shrink,variation_bounded\n");
        for (double eps : eps_list) {
            const auto samples = sample_family(family, experiment_grid(family, cfg, eps), eps);
            if (want_operator) {
                std::vector<Wavefunction> states;
                for (const auto& s : samples) states.push_back(s.psi);
                write_operator_row(op, "initial", 0.0, operator_inequality_diagnostics(states, lambdas, {}, cfg.husimi));
            }
            if (!want_time && !want_tight) continue;
            const auto evo = evolve_family(samples, pot, T, cfg.time_samples, cfg.propagator);
            if (want_time) {
                const auto nc = no_concentration_diagnostics(evo, lambdas, {}, cfg.husimi);
                for (std::size_t i = 0; i < nc.times.size(); ++i) write_operator_row(op, "evolved", nc.times[i], nc.per_time[i]);
                run.note("derived.no_concentration_persists.eps_" + g17(eps), nc.persists ? "true" : "false");
            }
            if (want_tight) {
                const auto tr = tightness_diagnostics(evo, pot, radii, rep.dictionary, cfg.husimi);
                for (std::size_t i = 0; i < tr.radii.size(); ++i)
                    std::fprintf(tf, "%s,%s,%s,%s,%s,%s,%d,%d\n", g17(eps).c_str(), g17(tr.radii[i]).c_str(), g17(tr.tail_initial[i]).c_str(),
                                 g17(tr.tail_sup[i]).c_str(), g17(tr.mean_energy).c_str(), g17(tr.fitted_c).c_str(), tr.tails_shrink ? 1 : 0,
                                 tr.variation_bounded ? 1 : 0);
            }
        }
        if (op) std::fclose(op);
        if (tf) std::fclose(tf);
    }
    for (const auto& r : rep.rows)
        if (r.excluded_fraction > cfg.max_exclusion)
            throw Error(ErrorKind::TailOverflow, "excluded fraction " + g17(r.excluded_fraction) + " at eps " + g17(r.eps) + " exceeds " + g17(cfg.max_exclusion));
}

int cmd_selftest(Run& run) {
    checks::Scale scale;
    if (!run.opts.full) {
        scale.main_samples = 16;
        scale.singular_samples = 4;
    }
    run.note("derived.main_samples", std::to_string(scale.main_samples));
    run.note("derived.singular_samples", std::to_string(scale.singular_samples));
    run.note("derived.operator_samples", std::to_string(scale.operator_samples));
    const auto results = checks::run_all(scale, [](const checks::CheckResult& r) {
        std::printf("%s\n", checks::format_line(r).c_str());
        std::fflush(stdout);
    });
    FILE* f = open_csv(run.path("selftest.csv"));
    std::fprintf(f, "id,name,pass,detail\n");
    int failed = 0;
    for (const auto& r : results) {
        failed += r.pass ? 0 : 1;
        std::string detail = r.detail;
        for (auto& c : detail)
            if (c == '"') c = '\'';
        std::fprintf(f, "%d,%s,%d,\"%s\"\n", r.id, r.name.c_str(), r.pass ? 1 : 0, detail.c_str());
    }
    std::fclose(f);
    std::printf("%d of %zu checks failed\n", failed, results.size());
    return failed == 0 ? 0 : kExitSelftest;
}

int exit_code(const Error& e) {
    if (e.is_numerical_guard()) return kExitGuard;
    switch (e.kind()) {
        case ErrorKind::Config:
        case ErrorKind::InvalidArgument:
        case ErrorKind::OutOfBox:
        case ErrorKind::ZeroNorm:
        case ErrorKind::OnSingularSet:
        case ErrorKind::SupportViolation:
        case ErrorKind::NonSeparable:
        case ErrorKind::NotNormalized:
            return kExitConfig;
        default:
            return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiclassical Wigner/Husimi laboratory"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opts;
    app.add_option("--out", opts.out, "Output directory");
    app.add_option("--threads", opts.threads, "Worker cap (0: all cores)");
    app.add_option("--seed-override", opts.seed_override, "Replace the config seed");
    struct Sub {
        const char* name;
        const char* help;
    };
    std::vector<CLI::App*> subs;
    for (const Sub s : {Sub{"propagate", "Evolve one wavefunction and record diagnostics"},
                        Sub{"wigner", "Wigner and Husimi fields, marginals and pairings"},
                        Sub{"classical", "Push an ensemble through the classical flow"},
                        Sub{"errorterms", "Error-functional pairings along an eps ladder"},
                        Sub{"converge", "Quantum-classical convergence experiment"}}) {
        auto* sub = app.add_subcommand(s.name, s.help);
        sub->add_option("--config", opts.config, "JSON config file")->required();
        subs.push_back(sub);
    }
    auto* self = app.add_subcommand("selftest", "Run the invariant and property suite");
    self->add_flag("--full", opts.full, "Full-size Monte-Carlo checks");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    set_thread_count(opts.threads);

    Run run;
    run.opts = opts;
    run.subcommand = app.get_subcommands().front()->get_name();
    try {
        fs::create_directories(opts.out);
        if (run.subcommand == "selftest") {
            const int rc = cmd_selftest(run);
            run.write_manifest();
            return rc;
        }
        const auto src = Source::load(opts.config);
        if (run.subcommand == "propagate") cmd_propagate(run, src);
        else if (run.subcommand == "wigner") cmd_wigner(run, src);
        else if (run.subcommand == "classical") cmd_classical(run, src);
        else if (run.subcommand == "errorterms") cmd_errorterms(run, src);
        else cmd_converge(run, src);
        run.write_manifest();
    } catch (const Error& e) {
        std::fprintf(stderr, "sclab %s: %s\n", run.subcommand.c_str(), e.what());
        if (e.is_numerical_guard()) run.write_manifest();
        return exit_code(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sclab %s: %s\n", run.subcommand.c_str(), e.what());
        return 1;
    }
    return 0;
}

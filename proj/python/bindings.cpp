#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sclab/classical_flow.hpp"
#include "sclab/ensemble_harness.hpp"
#include "sclab/error.hpp"
#include "sclab/error_terms.hpp"
#include "sclab/parallel.hpp"
#include "sclab/phase_space.hpp"
#include "sclab/propagator.hpp"

namespace py = pybind11;
using namespace sclab;

namespace {

Coord to_coord(const std::vector<double>& v) {
    require(v.size() >= 1 && v.size() <= 2, ErrorKind::InvalidArgument, "coordinates need 1 or 2 entries");
    Coord c{0.0, 0.0};
    for (std::size_t i = 0; i < v.size(); ++i) c[i] = v[i];
    return c;
}

std::vector<double> from_coord(const Coord& c, int n) { return {c.begin(), c.begin() + n}; }

py::array_t<std::complex<double>> values_array(const Wavefunction& psi) {
    std::vector<py::ssize_t> shape;
    for (const auto& a : psi.grid.axes()) shape.push_back(static_cast<py::ssize_t>(a.count));
    py::array_t<std::complex<double>> out(shape);
    std::copy(psi.values.begin(), psi.values.end(), out.mutable_data());
    return out;
}

py::array_t<double> axis_nodes(const Axis& a) {
    std::vector<double> v(a.count);
    for (std::size_t i = 0; i < a.count; ++i) v[i] = a.node(i);
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict field_dict(const PhaseSpaceField& f) {
    py::dict d;
    d["kind"] = to_string(f.kind);
    d["eps"] = f.eps;
    py::list xs, ps;
    for (const auto& a : f.x_axes) xs.append(axis_nodes(a));
    for (const auto& a : f.p_axes) ps.append(axis_nodes(a));
    d["x_nodes"] = xs;
    d["p_nodes"] = ps;
    py::array_t<double> v({static_cast<py::ssize_t>(f.x_size()), static_cast<py::ssize_t>(f.p_size())});
    std::copy(f.values.begin(), f.values.end(), v.mutable_data());
    d["values"] = v;
    d["cell_volume"] = f.cell_volume();
    return d;
}

TestFunction make_test_function(const std::vector<double>& x_centre, const std::vector<double>& x_radius,
                                const std::vector<double>& p_centre, const std::vector<double>& p_radius, double coefficient) {
    TestFunction t;
    t.n = static_cast<int>(x_centre.size());
    t.coefficient = coefficient;
    t.x_factor = {to_coord(x_centre), to_coord(x_radius)};
    t.p_factor = {to_coord(p_centre), to_coord(p_radius)};
    return t;
}

}  // namespace

PYBIND11_MODULE(_sclab, m) {
    m.doc() = "Semiclassical Wigner/Husimi laboratory";

    static py::exception<Error> error(m, "SclabError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            error(e.what());
        }
    });

    m.def("set_thread_count", &set_thread_count, py::arg("threads"));

    py::class_<SpatialGrid>(m, "Grid")
        .def_static("cube", &SpatialGrid::cube, py::arg("n"), py::arg("points"), py::arg("lo"), py::arg("hi"))
        .def_static("staggered", &SpatialGrid::staggered, py::arg("n"), py::arg("points"), py::arg("lo"), py::arg("hi"))
        .def_property_readonly("dim", &SpatialGrid::dim)
        .def_property_readonly("size", &SpatialGrid::size)
        .def_property_readonly("cell_volume", &SpatialGrid::cell_volume)
        .def("nodes", [](const SpatialGrid& g, int axis) { return axis_nodes(g.axis(axis)); }, py::arg("axis") = 0);

    py::class_<Wavefunction>(m, "Wavefunction")
        .def_property_readonly("grid", [](const Wavefunction& w) { return w.grid; })
        .def_readonly("eps", &Wavefunction::eps)
        .def_property_readonly("values", &values_array)
        .def("norm_squared", &Wavefunction::norm_squared);

    m.def("coherent_state", [](const SpatialGrid& g, double eps, const std::vector<double>& y, const std::vector<double>& p) {
        return coherent_state(g, eps, to_coord(y), to_coord(p)).psi;
    }, py::arg("grid"), py::arg("eps"), py::arg("x0"), py::arg("p0"));

    m.def("wave_packet", [](const SpatialGrid& g, double eps, double alpha, const std::vector<double>& x0, const std::vector<double>& p0,
                            const std::string& envelope, double radius) {
        const Envelope env{envelope == "bump" ? EnvelopeKind::Bump : EnvelopeKind::Gaussian, radius};
        return wave_packet(g, eps, alpha, to_coord(x0), to_coord(p0), env).psi;
    }, py::arg("grid"), py::arg("eps"), py::arg("alpha"), py::arg("x0"), py::arg("p0"), py::arg("envelope") = "gaussian", py::arg("radius") = 1.0);

    py::class_<Potential>(m, "Potential")
        .def(py::init([](int n, const std::string& kind, double omega, double amplitude, double wavenumber, double depth, double width,
                         const std::vector<double>& charges, double softening) {
                 BoundedPart b;
                 b.kind = bounded_kind_from_string(kind);
                 b.omega = omega;
                 b.amplitude = amplitude;
                 b.wavenumber = wavenumber;
                 b.depth = depth;
                 b.width = width;
                 return charges.empty() ? Potential(n, b) : Potential(n, b, charges, softening);
             }),
             py::arg("n") = 1, py::arg("kind") = "zero", py::arg("omega") = 1.0, py::arg("amplitude") = 1.0, py::arg("wavenumber") = 1.0,
             py::arg("depth") = 1.0, py::arg("width") = 1.0, py::arg("charges") = std::vector<double>{}, py::arg("softening") = 0.0)
        .def("value", [](const Potential& p, const std::vector<double>& x) { return p.value(to_coord(x)); })
        .def("dist_to_singular_set", [](const Potential& p, const std::vector<double>& x) { return p.dist_to_singular_set(to_coord(x)); })
        .def("describe", &Potential::describe);

    m.def("propagate", [](const Wavefunction& psi, const Potential& pot, double T, std::size_t samples, double dt, double tail_tolerance) {
        PropagatorConfig cfg;
        cfg.dt = dt;
        cfg.tail_tolerance = tail_tolerance;
        const auto traj = propagate(psi, pot, T, samples, cfg, true);
        py::dict d;
        d["times"] = traj.times;
        std::vector<double> mass, energy;
        for (const auto& q : traj.diagnostics) {
            mass.push_back(q.mass);
            energy.push_back(q.energy);
        }
        d["mass"] = mass;
        d["energy"] = energy;
        d["states"] = traj.states;
        d["dt"] = traj.dt;
        d["steps"] = traj.steps;
        return d;
    }, py::arg("psi"), py::arg("potential"), py::arg("T"), py::arg("samples") = 2, py::arg("dt") = 0.0, py::arg("tail_tolerance") = 1e-6);

    m.def("wigner", [](const Wavefunction& psi) { return field_dict(wigner(psi)); }, py::arg("psi"));
    m.def("husimi", [](const Wavefunction& psi) { return field_dict(husimi(psi)); }, py::arg("psi"));
    m.def("husimi_at", [](const Wavefunction& psi, const std::vector<double>& y, const std::vector<double>& p) {
        return husimi_at(psi, to_coord(y), to_coord(p));
    }, py::arg("psi"), py::arg("x"), py::arg("p"));
    m.def("momentum_second_moment", [](const Wavefunction& psi) {
        const auto mm = momentum_second_moment(psi);
        return py::make_tuple(mm.wigner_side, mm.gradient_side);
    }, py::arg("psi"));

    m.def("i_eps_pairing", [](const Wavefunction& psi, const Potential& pot, const std::vector<double>& x_centre,
                              const std::vector<double>& x_radius, const std::vector<double>& p_centre, const std::vector<double>& p_radius,
                              double coefficient) {
        const auto r = pair_I_eps(pot, psi, make_test_function(x_centre, x_radius, p_centre, p_radius, coefficient));
        py::dict d;
        d["pairing"] = r.pairing;
        d["transport"] = r.transport;
        d["discrepancy"] = r.discrepancy;
        d["bound"] = r.bound;
        return d;
    }, py::arg("psi"), py::arg("potential"), py::arg("x_centre"), py::arg("x_radius"), py::arg("p_centre"), py::arg("p_radius"),
       py::arg("coefficient") = 1.0);

    m.def("flow_map", [](const std::vector<double>& x, const std::vector<double>& p, const Potential& pot, double T, std::size_t samples, double h) {
        FlowConfig cfg;
        cfg.h = h;
        const auto tr = flow_map(to_coord(x), to_coord(p), pot, T, samples, cfg);
        const int n = pot.dim();
        py::list xs, ps;
        for (const auto& z : tr.points) {
            xs.append(from_coord(z.x, n));
            ps.append(from_coord(z.p, n));
        }
        py::dict d;
        d["times"] = tr.times;
        d["x"] = xs;
        d["p"] = ps;
        d["absorbed"] = tr.absorbed;
        return d;
    }, py::arg("x"), py::arg("p"), py::arg("potential"), py::arg("T"), py::arg("samples") = 2, py::arg("h") = 1e-3);

    m.def("converge", [](const Potential& pot, double T, const std::vector<double>& ladder, const std::vector<double>& x_lo,
                         const std::vector<double>& x_hi, const std::vector<double>& p_lo, const std::vector<double>& p_hi, std::size_t samples,
                         double alpha, std::uint64_t seed, double box_lo, double box_hi, double momentum_reach, std::size_t time_samples) {
        RandomFamily fam;
        fam.n = pot.dim();
        fam.alpha = alpha;
        fam.samples = samples;
        fam.seed = seed;
        fam.rho.box.n = fam.n;
        fam.rho.box.x_lo = to_coord(x_lo);
        fam.rho.box.x_hi = to_coord(x_hi);
        fam.rho.box.p_lo = to_coord(p_lo);
        fam.rho.box.p_hi = to_coord(p_hi);
        ExperimentConfig cfg;
        cfg.box_lo = box_lo;
        cfg.box_hi = box_hi;
        cfg.momentum_reach = momentum_reach;
        cfg.time_samples = time_samples;
        cfg.staggered = pot.singular_enabled();
        const auto rep = run_convergence_experiment(fam, pot, T, ladder, cfg);
        py::dict d;
        std::vector<double> eps, D, se, excl;
        for (const auto& r : rep.rows) {
            eps.push_back(r.eps);
            D.push_back(r.D);
            se.push_back(r.std_error);
            excl.push_back(r.excluded_fraction);
        }
        d["eps"] = eps;
        d["D"] = D;
        d["stderr"] = se;
        d["excluded_fraction"] = excl;
        d["decreasing"] = rep.decreasing();
        return d;
    }, py::arg("potential"), py::arg("T"), py::arg("eps_ladder"), py::arg("x_lo"), py::arg("x_hi"), py::arg("p_lo"), py::arg("p_hi"),
       py::arg("samples") = 64, py::arg("alpha") = 0.5, py::arg("seed") = 1, py::arg("box_lo") = -8.0, py::arg("box_hi") = 8.0,
       py::arg("momentum_reach") = 2.0, py::arg("time_samples") = 16);
}

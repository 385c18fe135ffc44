#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "compactflow/bench.hpp"
#include "compactflow/errors.hpp"
#include "compactflow/mesh_motion.hpp"
#include "compactflow/pade.hpp"
#include "compactflow/properties.hpp"

namespace py = pybind11;
using namespace compactflow;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Fields are stored xi fastest, so they map to (n_eta, n_xi) C arrays.
Array to_numpy(const Field& f) {
    Array out({f.ny(), f.nx()});
    std::copy(f.data(), f.data() + f.size(), out.mutable_data());
    return out;
}

Field from_numpy(const Array& a) {
    if (a.ndim() != 2) throw InvalidArgument("expected a 2-D array");
    Field f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), f.data());
    return f;
}

py::dict norms(const NormTriple& n) {
    py::dict d;
    d["l1"] = n.l1;
    d["l2"] = n.l2;
    d["linf"] = n.linf;
    return d;
}

py::dict report_dict(const RunReport& r) {
    py::dict d;
    d["case"] = r.case_name;
    d["grid"] = r.grid;
    d["dt"] = r.dt;
    d["steps"] = r.steps;
    py::list errors;
    for (const ErrorSample& e : r.errors) {
        py::dict s = norms(e.norms);
        s["time"] = e.time;
        s["quantity"] = e.quantity;
        errors.append(s);
    }
    d["errors"] = errors;
    py::list monitor;
    for (const MonitorSample& m : r.monitor) monitor.append(py::make_tuple(m.time, m.u, m.v));
    d["monitor"] = monitor;
    d["picard_mean"] = r.picard_mean;
    d["picard_max"] = r.picard_max;
    d["div_max"] = r.div_max;
    d["seconds"] = r.seconds;
    d["x"] = to_numpy(r.final_grid.x);
    d["y"] = to_numpy(r.final_grid.y);
    py::dict fields;
    for (const NamedField& f : r.fields) fields[py::str(f.name)] = to_numpy(f.values);
    d["fields"] = fields;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Compact fourth-order flow solvers on deforming structured grids";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

    m.def(
        "pade_derivative",
        [](const std::vector<double>& values, double spacing) { return pade_derivative_line(values, spacing); },
        py::arg("values"), py::arg("spacing"));

    m.def(
        "exact_pulse",
        [](double x, double y, double t, double diffusion, std::pair<double, double> velocity, double width,
           std::pair<double, double> centre) {
            PulseParams p;
            p.diffusion = diffusion;
            p.velocity = {velocity.first, velocity.second};
            p.width = width;
            p.centre = {centre.first, centre.second};
            return exact_pulse(p, {x, y}, t);
        },
        py::arg("x"), py::arg("y"), py::arg("t"), py::arg("diffusion") = 0.01,
        py::arg("velocity") = std::make_pair(0.8, 0.8), py::arg("width") = 100.0,
        py::arg("centre") = std::make_pair(0.5, 0.5));

    m.def(
        "exact_taylor",
        [](int n, double re, double x, double y, double t) {
            const TaylorValue v = exact_taylor(n, re, {x, y}, t);
            return py::make_tuple(v.u, v.v, v.p);
        },
        py::arg("n"), py::arg("re"), py::arg("x"), py::arg("y"), py::arg("t"));

    m.def(
        "error_norms", [](const Array& numeric, const Array& exact) {
            return norms(error_norms(from_numpy(numeric), from_numpy(exact)));
        },
        py::arg("numeric"), py::arg("exact"));

    m.def("observed_order", &observed_order, py::arg("e_coarse"), py::arg("e_fine"), py::arg("ratio"));

    m.def(
        "normalize_config", [](const std::string& json) { return serialize_config(parse_config(json)); },
        py::arg("json"), "Parse a JSON case description, fill in defaults and return it as JSON.");

    m.def(
        "run_case",
        [](const std::string& json) {
            const CaseConfig cfg = parse_config(json);
            RunReport r;
            {
                py::gil_scoped_release release;
                r = run_case(cfg);
            }
            return report_dict(r);
        },
        py::arg("json"));

    m.def("motion_grid", [](const std::string& kind, int n, double tau) {
        const MotionCase c = motion_case_from_string(kind);
        MotionPrescription mp;
        switch (c) {
        case MotionCase::Static: mp = MotionPrescription::stationary(ParamSpace::unit_square(n)); break;
        case MotionCase::PulseDeformTranslate: mp = MotionPrescription::pulse_deform_translate(n); break;
        case MotionCase::Wavy: mp = MotionPrescription::wavy(n, 4); break;
        case MotionCase::WavyFixed: mp = MotionPrescription::wavy_fixed(n); break;
        case MotionCase::CavityStretch: mp = MotionPrescription::cavity_stretch(n); break;
        case MotionCase::CavityBump: mp = MotionPrescription::cavity_bump(n); break;
        }
        const PhysicalGrid g = mp.grid(tau);
        return py::make_tuple(to_numpy(g.x), to_numpy(g.y));
    }, py::arg("kind"), py::arg("n"), py::arg("tau"));

    m.def("property_suite", [] {
        py::list out;
        for (const PropertyResult& r : run_property_suite()) {
            py::dict d;
            d["name"] = r.name;
            d["value"] = r.value;
            d["tolerance"] = r.tolerance;
            d["passed"] = r.passed;
            out.append(d);
        }
        return out;
    });
}

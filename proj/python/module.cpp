// Thin python surface: every call takes/returns JSON text and reuses the
// same serialization as the CLI, so results match the command line exactly.
// The glimmlab python package wraps these in dict-returning helpers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "glimmlab/errors.hpp"
#include "glimmlab/io.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace glimmlab;

namespace {

Vec to_vec(const std::vector<double>& v) {
    Vec u(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) u[static_cast<Eigen::Index>(i)] = v[i];
    return u;
}

json params_of(const std::string& params) {
    return params.empty() ? json() : json::parse(params);
}

std::string py_riemann(const std::string& model_name,
                       const std::vector<double>& ul,
                       const std::vector<double>& ur,
                       const std::string& params) {
    FluxModel model = make_model(model_name, params_of(params));
    RiemannFan fan = solve_riemann(model, to_vec(ul), to_vec(ur));
    return fan_to_json(model, fan).dump();
}

std::string py_merge(const std::string& model_name,
                     const std::vector<double>& ul,
                     const std::vector<double>& um,
                     const std::vector<double>& ur,
                     const std::string& params) {
    FluxModel model = make_model(model_name, params_of(params));
    return ledger_to_json(
               interaction_ledger(model, to_vec(ul), to_vec(um), to_vec(ur)))
        .dump();
}

std::string py_run(const std::string& config) {
    GlimmConfig cfg = glimm_config_from_json(json::parse(config));
    return trace_to_json(glimm_run(cfg)).dump();
}

std::string py_verify(const std::string& trace) {
    GlimmTrace tr = trace_from_json(json::parse(trace));
    LagrangianRep rep = build_lagrangian(tr);
    PotentialRep pot = build_threads(rep);
    Potential P(pot);
    json out = decay_report_to_json(P.verify_decay());
    out["config"] = config_to_json(tr.config);
    return out.dump();
}

std::string py_packages_csv(const std::string& trace) {
    GlimmTrace tr = trace_from_json(json::parse(trace));
    return packages_csv(build_lagrangian(tr));
}

std::string py_functionals_csv(const std::string& trace) {
    GlimmTrace tr = trace_from_json(json::parse(trace));
    return functional_series_csv(tr);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "scheme driver and wave-interaction reports (JSON-text interface)";
    m.def("riemann", &py_riemann, py::arg("model"), py::arg("ul"), py::arg("ur"),
          py::arg("params") = "");
    m.def("merge", &py_merge, py::arg("model"), py::arg("ul"), py::arg("um"),
          py::arg("ur"), py::arg("params") = "");
    m.def("run", &py_run, py::arg("config"));
    m.def("verify", &py_verify, py::arg("trace"));
    m.def("packages_csv", &py_packages_csv, py::arg("trace"));
    m.def("functionals_csv", &py_functionals_csv, py::arg("trace"));
    m.def("vdc", &vdc_sequence, py::arg("i"));

    py::register_exception<ModuleError>(m, "SolverError");
    py::register_exception<ConfigError>(m, "BadConfig");
}

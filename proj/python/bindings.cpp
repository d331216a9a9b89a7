#include <optional>
#include <string>
#include <vector>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ksblow/config.hpp"
#include "ksblow/diagnostics.hpp"
#include "ksblow/errors.hpp"
#include "ksblow/initdata.hpp"
#include "ksblow/nonlinearity.hpp"
#include "ksblow/scenario.hpp"

namespace py = pybind11;
using namespace ksblow;

namespace {

// JSON crosses the boundary as text; the Python layer decodes it.
std::string conditions_json(const NonlinearityModel& m, bool sampled) {
  const auto report = sampled ? check_conditions_sampled(m) : check_conditions(m);
  nlohmann::json j{{"model", m.to_json()},
                   {"conditions", report.to_json()},
                   {"regime", to_string(classify_regime(report))}};
  return j.dump();
}

std::string simulate_json(const std::string& text, std::optional<int> refinements) {
  const auto cfg = simulation_config_from_text(text);
  py::gil_scoped_release release;
  return simulate(cfg, refinements).summary.dump();
}

py::dict initial_data(const std::string& text) {
  const auto cfg = simulation_config_from_text(text);
  const auto model = cfg.model.build();
  const auto mesh = make_mesh(cfg.R, cfg.N);
  const auto data = prepare_initial_data(cfg, model, mesh);
  std::vector<double> r(cfg.N);
  for (int i = 0; i < cfg.N; ++i) r[i] = mesh->center(i);
  py::dict d;
  d["r"] = r;
  d["u"] = data.state.u.values;
  d["v"] = data.state.v.values;
  d["report"] = data.to_json().dump();
  d["config_hash"] = cfg.hash();
  return d;
}

std::vector<py::dict> sweep_rows(const std::string& text, int jobs, std::optional<int> refinements) {
  const auto spec = sweep_spec_from_text(text);
  std::vector<SweepRow> rows;
  {
    py::gil_scoped_release release;
    rows = run_sweep(spec, jobs > 0 ? jobs : spec.jobs, refinements);
  }
  std::vector<py::dict> out;
  for (const auto& row : rows) {
    py::dict d;
    d["cell"] = row.cell;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) d[py::str(spec.axes[a].first)] = row.values[a];
    d["verdict"] = row.verdict;
    d["T_star"] = row.T_star;
    d["max_linf_u"] = row.max_linf_u;
    d["sup_ratio36"] = row.sup_ratio36;
    d["config_hash"] = row.config_hash;
    d["message"] = row.message;
    out.push_back(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Radial Keller-Segel simulator core";

  // Translators are tried newest first, so the subclass goes last.
  py::register_exception<Error>(m, "KsblowError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<NonlinearityModel>(m, "Model")
      .def_static("semilinear", &NonlinearityModel::semilinear, py::arg("s0") = std::numbers::e)
      .def_static("power_diffusion", &NonlinearityModel::power_diffusion, py::arg("q"),
                  py::arg("s0") = std::numbers::e)
      .def_static("remark_family", &NonlinearityModel::remark_family, py::arg("gamma1"), py::arg("gamma2"),
                  py::arg("s0") = std::numbers::e)
      .def_static("custom", &NonlinearityModel::custom, py::arg("label"), py::arg("phi"), py::arg("beta"),
                  py::arg("s0") = std::numbers::e)
      .def_static("from_spec", &NonlinearityModel::from_spec)
      .def_property_readonly("spec", &NonlinearityModel::spec)
      .def_property_readonly("s0", &NonlinearityModel::s0)
      .def("phi", &NonlinearityModel::phi)
      .def("beta", &NonlinearityModel::beta)
      .def("psi", &NonlinearityModel::psi)
      .def("G", &NonlinearityModel::G)
      .def("H", &NonlinearityModel::H)
      .def("G_quadrature", &NonlinearityModel::G_quadrature)
      .def("H_quadrature", &NonlinearityModel::H_quadrature)
      .def("__repr__", [](const NonlinearityModel& self) { return "Model(" + self.spec() + ")"; });

  m.def("_conditions_json", &conditions_json, py::arg("model"), py::arg("sampled") = false);
  m.def("_simulate_json", &simulate_json, py::arg("config_text"), py::arg("refinements") = std::nullopt);
  m.def("initial_data", &initial_data, py::arg("config_text"));
  m.def("sweep", &sweep_rows, py::arg("config_text"), py::arg("jobs") = 0,
        py::arg("refinements") = std::nullopt);
  m.def("config_hash", [](const std::string& text) { return simulation_config_from_text(text).hash(); });
  m.def("canonical_config", [](const std::string& text) { return simulation_config_from_text(text).to_text(); });
  m.attr("SERIES_HEADER") = kSeriesHeader;
}

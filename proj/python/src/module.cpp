#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dimdecomp/error.hpp"
#include "dimdecomp/sobol.hpp"
#include "dimdecomp/study.hpp"
#include "run.hpp"

namespace py = pybind11;
using namespace dimdecomp;

namespace {

py::dict to_dict(const StudyResult& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict d;
    d["method"] = row.method;
    d["S"] = row.s;
    d["N"] = row.n;
    d["value"] = row.value;
    d["error_indicator"] = row.error_indicator;
    d["provenance"] = row.provenance;
    if (row.x) d["x"] = *row.x;
    rows.append(d);
  }
  py::dict meta;
  for (const auto& [k, v] : r.metadata) meta[py::str(k)] = v;
  py::dict out;
  out["name"] = r.name;
  out["rows"] = rows;
  out["metadata"] = meta;
  out["warnings"] = r.warnings;
  return out;
}

py::dict to_dict(const Quantity& q) {
  py::dict d;
  d["value"] = q.value;
  d["error_indicator"] = q.error_indicator;
  d["provenance"] = q.provenance;
  return d;
}

py::array_t<double> sobol_points(std::size_t count, std::size_t dim, bool scrambled, std::uint64_t seed) {
  const SobolSequence seq(dim);
  py::array_t<double> out({count, dim});
  auto a = out.mutable_unchecked<2>();
  std::vector<double> p(dim);
  for (std::size_t i = 0; i < count; ++i) {
    if (scrambled)
      seq.scrambled_point(i, seed, p);
    else
      seq.point(i, p);
    for (std::size_t d = 0; d < dim; ++d) a(i, d) = p[d];
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dimensional decompositions of multivariate functions";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<BudgetExhausted>(m, "BudgetExhausted", base.ptr());
  py::register_exception<IntegrationFailure>(m, "IntegrationFailure", base.ptr());
  py::register_exception<SingularFactor>(m, "SingularFactor", base.ptr());
  py::register_exception<Unavailable>(m, "Unavailable", base.ptr());
  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<IntegrationSpec>(m, "IntegrationSpec")
      .def_static("tensor_gauss", &IntegrationSpec::tensor_gauss, py::arg("points_per_dim"))
      .def_static("monte_carlo", &IntegrationSpec::monte_carlo, py::arg("count"), py::arg("seed"))
      .def_static("rqmc", &IntegrationSpec::rqmc, py::arg("count"), py::arg("seed"), py::arg("replicates") = 8)
      .def_property_readonly("id", &IntegrationSpec::id)
      .def("__repr__", [](const IntegrationSpec& s) { return "IntegrationSpec(" + s.id() + ")"; });

  py::class_<InputModel>(m, "InputModel").def("__len__", &InputModel::dimension);

  py::class_<FunctionSpec>(m, "FunctionSpec")
      .def_property_readonly("dimension", &FunctionSpec::dimension)
      .def("__call__", [](const FunctionSpec& y, const std::vector<double>& x) {
        if (x.size() != y.dimension()) throw InvalidArgument("point has the wrong dimension");
        return y(x);
      });

  m.def(
      "make_example",
      [](const std::string& name, std::size_t n, int power, double y_empty, double nu0, double mu0) {
        return make_example(name, {.n = n, .m = power, .y_empty = y_empty, .nu0 = nu0, .mu0 = mu0});
      },
      py::arg("name"), py::arg("n") = 6, py::arg("m") = 1, py::arg("y_empty") = 5.0, py::arg("nu0") = 100.0,
      py::arg("mu0") = 0.0);
  m.def("example_model", &example_model, py::arg("n"), "i.i.d. uniform(0,1) inputs");

  py::class_<Pipeline>(m, "Pipeline")
      .def(py::init([](FunctionSpec y, InputModel model, IntegrationSpec integration,
                       std::optional<IntegrationSpec> add_integration, int grid_points,
                       std::optional<std::size_t> max_order) {
             PipelineOptions o;
             o.integration = integration;
             o.add_integration = add_integration;
             o.grid_points = grid_points;
             o.max_order = max_order;
             return std::make_unique<Pipeline>(std::move(y), std::move(model), o);
           }),
           py::arg("function"), py::arg("model"), py::arg("integration") = IntegrationSpec::tensor_gauss(4),
           py::arg("add_integration") = std::nullopt, py::arg("grid_points") = 0, py::arg("max_order") = std::nullopt)
      .def_property_readonly("dimension", &Pipeline::dimension)
      .def("exact_variance", [](Pipeline& p) { return to_dict(p.exact_variance()); })
      .def(
          "variance", [](Pipeline& p, const std::string& method, std::size_t s) {
            return to_dict(p.variance(parse_method(method), s));
          },
          py::arg("method"), py::arg("S"))
      .def(
          "relative_variance_error",
          [](Pipeline& p, const std::string& method, std::size_t s) {
            return to_dict(p.relative_variance_error(parse_method(method), s));
          },
          py::arg("method"), py::arg("S"))
      .def("fdd_mean", [](Pipeline& p, std::size_t s) { return to_dict(p.fdd_mean(s)); }, py::arg("S"))
      .def(
          "effective_dimension",
          [](Pipeline& p, const std::string& method, double level) {
            return p.effective_dimension(parse_method(method), level);
          },
          py::arg("method"), py::arg("p") = 0.99)
      .def("univariate_errors", [](Pipeline& p) {
        const auto r = p.univariate_errors();
        py::dict d;
        d["exact_variance"] = r.exact_variance;
        d["add"] = r.e_add_1;
        d["fdd"] = r.e_fdd_1;
        d["hdd_linear"] = r.e_hdd_1_linear;
        d["hdd_nonlinear"] = r.e_hdd_1_nonlinear;
        d["fdd_variance_dominates"] = r.fdd_variance_dominates;
        d["hybrid_is_best"] = r.hybrid_is_best;
        return d;
      });

  m.def("table1", [] { return to_dict(table1()); });
  m.def("table2", [] { return to_dict(table2()); });
  m.def("table3", [] { return to_dict(table3()); });
  m.def("table4", [] { return to_dict(table4()); });
  m.def("example4_errors", [] { return to_dict(example4_errors()); });

  // Configs travel as JSON text so validation is the CLI's own.
  m.def(
      "run_json", [](const std::string& text) { return to_dict(cli::run(cli::Json::parse(text))); },
      py::arg("config"));
  m.def("to_csv_json", [](const std::string& text) { return cli::to_csv(cli::run(cli::Json::parse(text))); },
        py::arg("config"));

  m.def("sobol_points", &sobol_points, py::arg("count"), py::arg("dimension"), py::arg("scrambled") = false,
        py::arg("seed") = 0);
}

#include "drme/chi2.hpp"
#include "drme/dgp.hpp"
#include "drme/montecarlo.hpp"
#include "drme/pipeline.hpp"
#include "drme/serialize.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

namespace py = pybind11;
using namespace drme;

namespace {

// `base` with the given JSON overrides applied; unknown keys are rejected.
pipeline::TestConfig config_with(const std::string& overrides,
                                 const pipeline::TestConfig& defaults = {}) {
  io::Json base = io::to_json(defaults);
  const io::Json patch = io::Json::parse(overrides.empty() ? "{}" : overrides);
  for (const auto& [key, value] : patch.items()) {
    if (!base.contains(key)) {
      throw InputError("unknown config key '" + key + "'");
    }
    base[key] = value;
  }
  return io::config_from_json(base);
}

Dataset make_dataset(const Matrix& x, const Eigen::VectorXi& a, const Matrix& y) {
  Dataset d;
  d.x = x;
  d.a = a;
  d.y = y;
  d.validate();
  if (!d.x.allFinite() || !d.y.allFinite()) {
    throw InputError("covariates and outcomes must be finite");
  }
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "DR-ME split-sample tests for distributional treatment effects";
  m.attr("__version__") = DRME_VERSION;

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("default_config", [] { return io::dump(io::to_json(pipeline::TestConfig{})); },
        "Default test configuration as a JSON string.");

  m.def(
      "run_test",
      [](const Matrix& x, const Eigen::VectorXi& a, const Matrix& y, const std::string& config) {
        const Dataset data = make_dataset(x, a, y);
        const pipeline::TestConfig c = config_with(config);
        py::gil_scoped_release release;
        return io::dump(io::to_json(pipeline::run_drme_test(data, c)));
      },
      py::arg("x"), py::arg("a"), py::arg("y"), py::arg("config") = "",
      "Split-sample test; returns the result as a JSON string.");

  m.def(
      "generate",
      [](const std::string& scenario, Index n, std::uint64_t seed, Index outcome_dim, double h) {
        std::mt19937_64 rng(seed);
        dgp::ScenarioParams params;
        params.outcome_dim = outcome_dim;
        params.h = h;
        const auto g = dgp::gen_scenario(dgp::parse_scenario(scenario), n, rng, params);
        return py::make_tuple(g.data.x, g.data.a, g.data.y);
      },
      py::arg("scenario"), py::arg("n"), py::arg("seed") = 0, py::arg("outcome_dim") = 5,
      py::arg("h") = 0.0, "Synthetic dataset as (x, a, y).");

  m.def(
      "simulate",
      [](const std::string& experiment, const std::vector<Index>& n_grid, int reps,
         const std::vector<std::string>& methods, std::uint64_t seed, unsigned workers,
         const std::string& config) {
        mc::ExperimentSpec spec = mc::experiment_preset(experiment);
        if (!n_grid.empty()) spec.n_grid = n_grid;
        if (reps > 0) spec.reps = reps;
        if (!methods.empty()) {
          spec.methods.clear();
          for (const auto& name : methods) spec.methods.push_back(mc::parse_method(name));
        }
        spec.config = config_with(config, spec.config);
        spec.base_seed = seed;
        spec.alpha = spec.config.alpha;
        spec.workers = workers;
        py::gil_scoped_release release;
        return io::dump(io::to_json(mc::monte_carlo(spec)));
      },
      py::arg("experiment"), py::arg("n_grid") = std::vector<Index>{}, py::arg("reps") = 0,
      py::arg("methods") = std::vector<std::string>{}, py::arg("seed") = 0, py::arg("workers") = 1,
      py::arg("config") = "", "Monte Carlo study from a named preset; returns a JSON report.");

  m.def("chi2_sf", &stats::chi2_sf, py::arg("x"), py::arg("df"));
  m.def("noncentral_chi2_sf", &stats::noncentral_chi2_sf, py::arg("x"), py::arg("df"), py::arg("nc"));
  m.def("theory_power", &dgp::theory_power, py::arg("h"), py::arg("noncentrality"), py::arg("df"),
        py::arg("alpha") = 0.05);
}

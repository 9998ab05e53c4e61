// SPDX-License-Identifier: Apache-2.0
//
// pybind11 surface for the main operations: scenario loading, analytic
// moments, Monte Carlo statistics, phase optimization, the capacity-region
// sweep, and experiment runners.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "riscap/experiments.hpp"
#include "riscap/montecarlo.hpp"

namespace py = pybind11;
using namespace riscap;

namespace {

TxSubset to_subset(const std::optional<std::vector<int>>& active, int num_txs) {
  if (!active) return full_subset(num_txs);
  return TxSubset(active->begin(), active->end());
}

PhaseConfig to_phases(const std::optional<std::vector<VecD>>& phases, int num_riss, int ns) {
  if (!phases) return PhaseConfig::identity(num_riss, ns);
  if (static_cast<int>(phases->size()) != num_riss)
    throw config_error("phases: expected one vector per RIS");
  PhaseConfig p;
  p.phases = *phases;
  for (const VecD& v : p.phases)
    if (v.size() != ns) throw config_error("phases: wrong element count");
  return p;
}

/// Scenario plus the derived objects the operations need.
struct Model {
  ScenarioConfig config;
  CorrelationSet corr;
  InputCovariance q;
  SteeringGeometry geo;

  explicit Model(ScenarioConfig cfg)
      : config(std::move(cfg)),
        corr(build_correlation_set(config)),
        q(make_input_covariance(config)),
        geo(steering_geometry(config)) {}

  SolveOptions solve_options() const {
    SolveOptions o;
    o.tolerance = config.solver.tolerance;
    o.max_iters = config.solver.max_iters;
    o.damping = config.solver.damping;
    return o;
  }

  py::dict stats(const std::optional<std::vector<VecD>>& phases,
                 const std::optional<std::vector<int>>& active, bool with_variance) const {
    const PhaseConfig p = to_phases(phases, config.num_riss, config.ns);
    const MIStats s = evaluate_stats(corr, q, p, to_subset(active, config.num_txs),
                                     solve_options(), with_variance);
    py::dict d;
    d["mean_total"] = s.mean_total;
    d["mean_per_tx_antenna"] = s.mean_per_tx_antenna;
    if (with_variance) d["variance"] = s.variance;
    return d;
  }

  py::dict monte_carlo(int samples, std::optional<uint64_t> seed,
                       const std::optional<std::vector<VecD>>& phases,
                       const std::optional<std::vector<int>>& active, int workers) const {
    const PhaseConfig p = to_phases(phases, config.num_riss, config.ns);
    const EmpiricalDistribution e =
        mi_statistics(corr, q, p, to_subset(active, config.num_txs), samples,
                      seed.value_or(config.seed), workers);
    py::dict d;
    d["mean"] = e.mean;
    d["variance"] = e.variance;
    d["stderr_mean"] = e.stderr_mean();
    d["samples"] = e.sorted_samples;
    return d;
  }

  std::vector<VecD> optimize_semi_py(std::optional<VecD> mu) const {
    const PriorityWeights w =
        mu ? PriorityWeights::validated(*mu) : PriorityWeights::sum_rate(config.num_txs);
    return optimize_semi(corr, q, geo, w, config.solver).phases.phases;
  }

  std::vector<VecD> optimize_full_py(std::optional<VecD> mu) const {
    const PriorityWeights w =
        mu ? PriorityWeights::validated(*mu) : PriorityWeights::sum_rate(config.num_txs);
    FullAscentOptions o;
    o.eps = config.solver.step;
    o.tolerance = config.solver.tolerance;
    o.phase_tolerance = config.solver.phase_tolerance;
    o.max_iters = config.solver.max_iters;
    return full_gradient_ascend(corr, q, w, o).phases.phases;
  }

  std::vector<VecD> pairing() const {
    return independent_pairing(geo, config.num_riss, config.num_txs).phases;
  }

  py::list region(int grid_points, const std::string& mode) const {
    OptimizerMode m = OptimizerMode::identity;
    if (mode == "semi")
      m = OptimizerMode::semi_optimal;
    else if (mode == "full")
      m = OptimizerMode::full;
    else if (mode != "identity")
      throw config_error("mode must be identity|semi|full");
    py::list out;
    for (const RatePoint& pt : sweep_region(corr, q, geo, grid_points, m, config.solver)) {
      py::dict d;
      d["mu"] = pt.mu;
      d["rates"] = pt.rates;
      d["sum_rate"] = pt.sum_rate;
      out.append(std::move(d));
    }
    return out;
  }
};

}  // namespace

PYBIND11_MODULE(_riscap, m) {
  m.doc() = "Asymptotic capacity statistics and RIS phase optimization for "
            "MIMO multiple-access channels";
  m.attr("__version__") = version_string;

  py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<numerical_error>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<Model>(m, "Model")
      .def(py::init([](const std::string& text, bool is_path) {
             return Model(is_path ? load_scenario_file(text) : parse_scenario(text));
           }),
           py::arg("scenario"), py::arg("is_path") = true)
      .def_property_readonly("num_txs", [](const Model& s) { return s.config.num_txs; })
      .def_property_readonly("num_riss", [](const Model& s) { return s.config.num_riss; })
      .def_property_readonly("ns", [](const Model& s) { return s.config.ns; })
      .def_property_readonly("scenario_hash",
                             [](const Model& s) { return scenario_hash(s.config); })
      .def("stats", &Model::stats, py::arg("phases") = py::none(),
           py::arg("active") = py::none(), py::arg("with_variance") = true)
      .def("monte_carlo", &Model::monte_carlo, py::arg("samples"),
           py::arg("seed") = py::none(), py::arg("phases") = py::none(),
           py::arg("active") = py::none(), py::arg("workers") = 1)
      .def("optimize_semi", &Model::optimize_semi_py, py::arg("mu") = py::none())
      .def("optimize_full", &Model::optimize_full_py, py::arg("mu") = py::none())
      .def("independent_pairing", &Model::pairing)
      .def("region", &Model::region, py::arg("grid_points") = 11,
           py::arg("mode") = "identity");

  m.def(
      "quantize_phases",
      [](const std::vector<VecD>& phases, int bits) {
        PhaseConfig p;
        p.phases = phases;
        return quantize_phases(p, bits).phases;
      },
      py::arg("phases"), py::arg("bits"));

  m.def(
      "gaussian_outage",
      [](double mean_total, double variance, double threshold) {
        MIStats s;
        s.mean_total = mean_total;
        s.variance = variance;
        return gaussian_outage(s, threshold);
      },
      py::arg("mean_total"), py::arg("variance"), py::arg("threshold"));

  m.def(
      "run_experiment",
      [](const std::string& id, const std::string& scenario_path, const std::string& out_dir,
         std::optional<uint64_t> seed, std::optional<int> samples, std::optional<int> ns,
         bool paper_scale, int workers) {
        RunOptions opts;
        opts.seed = seed;
        opts.samples = samples;
        opts.ns_override = ns;
        opts.paper_scale = paper_scale;
        opts.workers = workers;
        const ExperimentResult r = run_experiment(id, load_scenario_file(scenario_path), opts);
        write_result(r, out_dir);
        py::dict d;
        d["id"] = r.id;
        d["scenario_hash"] = r.scenario_hash;
        d["rows"] = r.region_rows.empty() ? r.rows.size() : r.region_rows.size();
        d["any_failed"] = r.any_failed;
        return d;
      },
      py::arg("experiment"), py::arg("scenario"), py::arg("out_dir"),
      py::arg("seed") = py::none(), py::arg("samples") = py::none(),
      py::arg("ns") = py::none(), py::arg("paper_scale") = false, py::arg("workers") = 1);
}

// SPDX-License-Identifier: Apache-2.0

#include "riscap/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "riscap/montecarlo.hpp"

namespace riscap {

namespace {

constexpr const char* kSeriesSchema =
    "experiment,x_label,x,series,y,y_mc,mc_stderr,status";
constexpr const char* kRegionSchema =
    "experiment,mu_1,mu_2,R_1,R_2,sum_rate,optimized,ns,sigma_deg,status";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int grid_side(int ns) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(ns))));
  if (side * side != ns)
    throw config_error("ns override must be a perfect square, got " + std::to_string(ns));
  return side;
}

ScenarioConfig resolve_base(const ScenarioConfig& in, const RunOptions& opts,
                            bool default_desk_ns) {
  ScenarioConfig c = in;
  if (opts.seed) c.seed = *opts.seed;
  if (opts.samples) {
    c.mc.samples_experiment = *opts.samples;
    c.mc.samples_mean = *opts.samples;
    c.mc.samples_var = *opts.samples;
  }
  if (opts.ns_override) {
    c = with_ns(std::move(c), *opts.ns_override);
  } else if (default_desk_ns && !opts.paper_scale) {
    c = with_ns(std::move(c), 64);
  }
  return validate(std::move(c));
}

ExperimentResult make_result(const std::string& id, const ScenarioConfig& base) {
  ExperimentResult r;
  r.id = id;
  r.seed = base.seed;
  r.scenario_hash = scenario_hash(base);
  r.scenario_text = canonical_scenario_text(base);
  return r;
}

struct SeriesPoint {
  double analytic = std::numeric_limits<double>::quiet_NaN();
  double mc = std::numeric_limits<double>::quiet_NaN();
  double mc_se = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

/// Analytic mean plus a Monte Carlo cross-check at the same phases.
SeriesPoint evaluate_point(const ScenarioConfig& cfg, const CorrelationSet& corr,
                           const InputCovariance& q, const PhaseConfig& phases,
                           int mc_samples, int workers) {
  SeriesPoint p;
  const TxSubset all = full_subset(corr.num_txs);
  SolveOptions sopts;
  sopts.tolerance = cfg.solver.tolerance;
  sopts.max_iters = cfg.solver.max_iters;
  sopts.damping = cfg.solver.damping;
  const MIStats stats = evaluate_stats(corr, q, phases, all, sopts, false);
  p.analytic = stats.mean_total;
  if (mc_samples >= 2) {
    const EmpiricalDistribution mc =
        mi_statistics(corr, q, phases, all, mc_samples, cfg.seed, workers);
    p.mc = mc.mean;
    p.mc_se = mc.stderr_mean();
  }
  return p;
}

SolverSettings solver_of(const ScenarioConfig& cfg) { return cfg.solver; }

}  // namespace

const char* csv_schema_series() { return kSeriesSchema; }
const char* csv_schema_region() { return kRegionSchema; }

ScenarioConfig with_ns(ScenarioConfig config, int ns) {
  const int side = grid_side(ns);
  for (RisSpec& r : config.riss) {
    r.rows = side;
    r.cols = side;
  }
  config.ns = ns;
  return validate(std::move(config));
}

ScenarioConfig with_spread(ScenarioConfig config, double sigma_deg) {
  const double s = deg_to_rad(sigma_deg);
  for (RisSpec& r : config.riss) r.outgoing.spread_rad = s;
  for (auto& row : config.incoming)
    for (AngularSpec& a : row) a.spread_rad = s;
  return validate(std::move(config));
}

ScenarioConfig with_num_riss(ScenarioConfig config, int num_riss) {
  if (num_riss > config.num_riss)
    throw config_error("with_num_riss: scenario defines fewer RISs");
  config.num_riss = num_riss;
  config.riss.resize(num_riss);
  config.incoming.resize(num_riss);
  return validate(std::move(config));
}

ScenarioConfig with_equidistant_txs(ScenarioConfig config, int num_txs, double phi_max_deg) {
  config.num_txs = num_txs;
  for (auto& row : config.incoming) {
    const AngularSpec proto = row.front();
    row.assign(num_txs, proto);
    for (int m = 0; m < num_txs; ++m) {
      double az = 0.0;
      if (num_txs > 1)
        az = -0.5 * phi_max_deg + phi_max_deg * m / (num_txs - 1);
      row[m].azimuth_rad = deg_to_rad(az);
    }
  }
  return validate(std::move(config));
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

ExperimentResult run_mi_vs_as(const ScenarioConfig& base_in, const RunOptions& opts) {
  const ScenarioConfig base = resolve_base(base_in, opts, true);
  ExperimentResult result = make_result("fig2", base);

  std::vector<int> ris_counts;
  for (int k = 1; k <= std::min(2, base.num_riss); ++k) ris_counts.push_back(k);

  for (double sigma_deg : base.grids.sigma_grid_deg) {
    for (int kk : ris_counts) {
      ScenarioConfig cfg = with_spread(with_num_riss(base, kk), sigma_deg);
      const std::string suffix = "K" + std::to_string(kk);
      try {
        const CorrelationSet corr = build_correlation_set(cfg);
        const InputCovariance q = make_input_covariance(cfg);
        const SteeringGeometry geo = steering_geometry(cfg);
        const PriorityWeights w = PriorityWeights::sum_rate(cfg.num_txs);

        std::vector<std::pair<std::string, PhaseConfig>> configs;
        configs.emplace_back(suffix + "_identity",
                             PhaseConfig::identity(kk, cfg.ns));
        {
          SemiResult semi = optimize_semi(corr, q, geo, w, solver_of(cfg));
          configs.emplace_back(suffix + "_semi", std::move(semi.phases));
        }
        {
          FullAscentOptions fopts;
          fopts.eps = cfg.solver.step;
          fopts.tolerance = cfg.solver.tolerance;
          fopts.phase_tolerance = cfg.solver.phase_tolerance;
          fopts.max_iters = cfg.solver.max_iters;
          FullResult full = full_gradient_ascend(corr, q, w, fopts);
          configs.emplace_back(suffix + "_full", std::move(full.phases));
        }
        if (kk <= cfg.num_txs)
          configs.emplace_back(suffix + "_pairing",
                               independent_pairing(geo, kk, cfg.num_txs));

        for (auto& [series, phases] : configs) {
          const SeriesPoint p = evaluate_point(cfg, corr, q, phases,
                                               cfg.mc.samples_experiment, opts.workers);
          result.rows.push_back(
              {"sigma_deg", sigma_deg, series, p.analytic, p.mc, p.mc_se, p.status});
        }
      } catch (const numerical_error& e) {
        result.any_failed = true;
        result.rows.push_back({"sigma_deg", sigma_deg, suffix + "_failed",
                               std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN(),
                               std::string("failed: ") + e.what()});
      }
    }
  }
  return result;
}

ExperimentResult run_mi_vs_users(const ScenarioConfig& base_in, const RunOptions& opts) {
  const ScenarioConfig base = resolve_base(base_in, opts, true);
  ExperimentResult result = make_result("fig3", base);

  for (int m_count : base.grids.tx_counts) {
    for (double phi_max : base.grids.phi_max_grid_deg) {
      const std::string series = "M" + std::to_string(m_count);
      try {
        ScenarioConfig cfg = with_equidistant_txs(base, m_count, phi_max);
        const CorrelationSet corr = build_correlation_set(cfg);
        const InputCovariance q = make_input_covariance(cfg);
        const SteeringGeometry geo = steering_geometry(cfg);
        const PriorityWeights w = PriorityWeights::sum_rate(cfg.num_txs);

        SemiResult semi = optimize_semi(corr, q, geo, w, solver_of(cfg));
        SeriesPoint p = evaluate_point(cfg, corr, q, semi.phases,
                                       cfg.mc.samples_experiment, opts.workers);
        if (!semi.report.converged) p.status = "unconverged";
        result.rows.push_back(
            {"phi_max_deg", phi_max, series, p.analytic, p.mc, p.mc_se, p.status});
      } catch (const numerical_error& e) {
        result.any_failed = true;
        result.rows.push_back({"phi_max_deg", phi_max, series,
                               std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN(),
                               std::string("failed: ") + e.what()});
      }
    }
  }
  return result;
}

ExperimentResult run_region(const ScenarioConfig& base_in, const RunOptions& opts) {
  const ScenarioConfig base = resolve_base(base_in, opts, true);
  ExperimentResult result = make_result("fig4", base);
  if (base.num_txs != 2) throw config_error("fig4 requires a 2-TX scenario");

  std::vector<int> sizes;
  if (opts.ns_override) {
    sizes = {*opts.ns_override};
  } else {
    sizes = opts.paper_scale ? std::vector<int>{400, 900} : std::vector<int>{64, 100};
  }

  for (int ns : sizes) {
    for (double sigma_deg : {4.0, 15.0}) {
      ScenarioConfig cfg = with_spread(with_ns(base, ns), sigma_deg);
      const CorrelationSet corr = build_correlation_set(cfg);
      const InputCovariance q = make_input_covariance(cfg);
      const SteeringGeometry geo = steering_geometry(cfg);
      for (bool optimized : {false, true}) {
        try {
          const auto points = sweep_region(
              corr, q, geo, cfg.grids.mu_points,
              optimized ? OptimizerMode::full : OptimizerMode::identity, cfg.solver,
              opts.workers);
          for (const RatePoint& pt : points) {
            RegionRow row;
            row.mu = pt.mu;
            row.rates = pt.rates;
            row.sum_rate = pt.sum_rate;
            row.optimized = optimized;
            row.ns = ns;
            row.sigma_deg = sigma_deg;
            row.status = pt.optimizer_converged ? "ok" : "unconverged";
            result.region_rows.push_back(std::move(row));
          }
        } catch (const numerical_error& e) {
          result.any_failed = true;
          RegionRow row;
          row.mu = VecD::Zero(2);
          row.rates = VecD::Zero(2);
          row.optimized = optimized;
          row.ns = ns;
          row.sigma_deg = sigma_deg;
          row.status = std::string("failed: ") + e.what();
          result.region_rows.push_back(std::move(row));
        }
      }
    }
  }
  return result;
}

ExperimentResult run_cdf(const ScenarioConfig& base_in, const RunOptions& opts) {
  const ScenarioConfig base = resolve_base(base_in, opts, true);
  ExperimentResult result = make_result("fig5", base);

  std::vector<int> sizes;
  if (opts.ns_override) {
    sizes = {*opts.ns_override};
  } else {
    sizes = opts.paper_scale ? std::vector<int>{400, 900} : std::vector<int>{64, 100};
  }

  for (int m_count : base.grids.tx_counts) {
    for (int ns : sizes) {
      const std::string tag = "M" + std::to_string(m_count) + "_ns" + std::to_string(ns);
      try {
        ScenarioConfig cfg = with_ns(base, ns);
        cfg = with_equidistant_txs(std::move(cfg), m_count, 90.0);
        const CorrelationSet corr = build_correlation_set(cfg);
        const InputCovariance q = make_input_covariance(cfg);
        const PhaseConfig phases = PhaseConfig::identity(cfg.num_riss, cfg.ns);
        const TxSubset all = full_subset(cfg.num_txs);

        SolveOptions sopts;
        sopts.tolerance = cfg.solver.tolerance;
        sopts.max_iters = cfg.solver.max_iters;
        sopts.damping = cfg.solver.damping;
        const MIStats stats = evaluate_stats(corr, q, phases, all, sopts, true);
        const EmpiricalDistribution mc = mi_statistics(
            corr, q, phases, all, cfg.mc.samples_var, cfg.seed, opts.workers);

        const double sd = std::sqrt(stats.variance);
        const int n_pts = std::max(2, cfg.grids.cdf_points);
        for (int i = 0; i < n_pts; ++i) {
          const double rate =
              stats.mean_total + sd * (-4.5 + 9.0 * i / (n_pts - 1));
          result.rows.push_back({"rate_nats", rate, tag + "_analytic",
                                 gaussian_outage(stats, rate),
                                 std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN(), "ok"});
          result.rows.push_back({"rate_nats", rate, tag + "_empirical", mc.cdf(rate),
                                 std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN(), "ok"});
        }
      } catch (const numerical_error& e) {
        result.any_failed = true;
        result.rows.push_back({"rate_nats", 0.0, tag,
                               std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN(),
                               std::string("failed: ") + e.what()});
      }
    }
  }
  return result;
}

ExperimentResult run_quantization(const ScenarioConfig& base_in, const RunOptions& opts) {
  const ScenarioConfig base = resolve_base(base_in, opts, true);
  ExperimentResult result = make_result("quant", base);

  const CorrelationSet corr = build_correlation_set(base);
  const InputCovariance q = make_input_covariance(base);
  const SteeringGeometry geo = steering_geometry(base);
  const PriorityWeights w = PriorityWeights::sum_rate(base.num_txs);

  FullAscentOptions fopts;
  fopts.eps = base.solver.step;
  fopts.tolerance = base.solver.tolerance;
  fopts.phase_tolerance = base.solver.phase_tolerance;
  fopts.max_iters = base.solver.max_iters;
  const FullResult full = full_gradient_ascend(corr, q, w, fopts);

  std::vector<std::pair<std::string, PhaseConfig>> configs;
  configs.emplace_back("identity", PhaseConfig::identity(base.num_riss, base.ns));
  configs.emplace_back("quant1", quantize_phases(full.phases, 1));
  configs.emplace_back("quant2", quantize_phases(full.phases, 2));
  configs.emplace_back("continuous", full.phases);

  double x = 0.0;
  for (auto& [series, phases] : configs) {
    const SeriesPoint p =
        evaluate_point(base, corr, q, phases, base.mc.samples_experiment, opts.workers);
    result.rows.push_back({"config_index", x, series, p.analytic, p.mc, p.mc_se, p.status});
    x += 1.0;
  }
  return result;
}

ExperimentResult run_experiment(const std::string& id, const ScenarioConfig& base,
                                const RunOptions& opts) {
  if (id == "fig2") return run_mi_vs_as(base, opts);
  if (id == "fig3") return run_mi_vs_users(base, opts);
  if (id == "fig4") return run_region(base, opts);
  if (id == "fig5") return run_cdf(base, opts);
  if (id == "quant") return run_quantization(base, opts);
  throw config_error("unknown experiment '" + id +
                     "' (expected fig2, fig3, fig4, fig5, or quant)");
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

std::string render_csv(const ExperimentResult& r) {
  std::string out;
  const bool region = !r.region_rows.empty();
  out += region ? "# riscap-region-csv v1\n" : "# riscap-series-csv v1\n";
  out += "# experiment = " + r.id + "\n";
  out += "# version = " + std::string(version_string) + "\n";
  out += "# seed = " + std::to_string(r.seed) + "\n";
  out += "# scenario_hash = " + r.scenario_hash + "\n";
  std::istringstream scn(r.scenario_text);
  std::string line;
  while (std::getline(scn, line)) out += "# scenario: " + line + "\n";
  if (region) {
    out += std::string(kRegionSchema) + "\n";
    for (const RegionRow& row : r.region_rows) {
      out += r.id + "," + fmt(row.mu[0]) + "," + fmt(row.mu.size() > 1 ? row.mu[1] : 0.0) +
             "," + fmt(row.rates[0]) + "," + fmt(row.rates.size() > 1 ? row.rates[1] : 0.0) +
             "," + fmt(row.sum_rate) + "," + (row.optimized ? "1" : "0") + "," +
             std::to_string(row.ns) + "," + fmt(row.sigma_deg) + "," + row.status + "\n";
    }
  } else {
    out += std::string(kSeriesSchema) + "\n";
    for (const ResultRow& row : r.rows) {
      out += r.id + "," + row.x_label + "," + fmt(row.x) + "," + row.series + "," +
             fmt(row.y) + "," + fmt(row.y_mc) + "," + fmt(row.mc_stderr) + "," + row.status +
             "\n";
    }
  }
  return out;
}

void write_result(const ExperimentResult& r, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string csv_path = out_dir + "/" + r.id + ".csv";
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw config_error("cannot write " + csv_path);
    out << render_csv(r);
  }
  nlohmann::json j;
  j["experiment"] = r.id;
  j["version"] = version_string;
  j["seed"] = r.seed;
  j["scenario_hash"] = r.scenario_hash;
  j["rows"] = r.region_rows.empty() ? r.rows.size() : r.region_rows.size();
  j["any_failed"] = r.any_failed;
  j["scenario"] = r.scenario_text;
  const std::string json_path = out_dir + "/" + r.id + ".json";
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw config_error("cannot write " + json_path);
  out << j.dump(2) << "\n";
}

}  // namespace riscap

// SPDX-License-Identifier: Apache-2.0
//
// Named experiment runners behind the CLI: parameter sweeps with analytic
// and Monte Carlo series, deterministic CSV/JSON emission.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riscap/region.hpp"

namespace riscap {

struct ResultRow {
  std::string x_label;
  double x = 0.0;
  std::string series;
  double y = 0.0;
  double y_mc = std::numeric_limits<double>::quiet_NaN();
  double mc_stderr = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

struct RegionRow {
  VecD mu;
  VecD rates;
  double sum_rate = 0.0;
  bool optimized = false;
  int ns = 0;
  double sigma_deg = 0.0;
  std::string status = "ok";
};

struct ExperimentResult {
  std::string id;
  std::string scenario_hash;
  uint64_t seed = 0;
  std::string scenario_text;  // canonical form of the resolved base scenario
  std::vector<ResultRow> rows;
  std::vector<RegionRow> region_rows;  // fig4-style output
  bool any_failed = false;
};

struct RunOptions {
  std::optional<uint64_t> seed;
  std::optional<int> samples;
  std::optional<int> ns_override;  // must be a perfect square
  bool paper_scale = false;
  int workers = 1;
};

/// Frozen CSV schema strings; a self-test asserts they match the writer.
const char* csv_schema_series();
const char* csv_schema_region();

ExperimentResult run_mi_vs_as(const ScenarioConfig& base, const RunOptions& opts);
ExperimentResult run_mi_vs_users(const ScenarioConfig& base, const RunOptions& opts);
ExperimentResult run_region(const ScenarioConfig& base, const RunOptions& opts);
ExperimentResult run_cdf(const ScenarioConfig& base, const RunOptions& opts);
ExperimentResult run_quantization(const ScenarioConfig& base, const RunOptions& opts);

ExperimentResult run_experiment(const std::string& id, const ScenarioConfig& base,
                                const RunOptions& opts);

/// Writes <id>.csv and <id>.json under out_dir; byte-identical for identical
/// (scenario, seed) regardless of worker count.
void write_result(const ExperimentResult& result, const std::string& out_dir);

std::string render_csv(const ExperimentResult& result);

/// Scenario variant helpers (re-validated copies).
ScenarioConfig with_ns(ScenarioConfig config, int ns);
ScenarioConfig with_spread(ScenarioConfig config, double sigma_deg);
ScenarioConfig with_num_riss(ScenarioConfig config, int num_riss);
ScenarioConfig with_equidistant_txs(ScenarioConfig config, int num_txs, double phi_max_deg);

}  // namespace riscap

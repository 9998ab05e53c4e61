// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration: counts, SNRs, RIS geometry, angular power
// spectra, solver and sampling settings. Parsed from an INI-style scenario
// file with hierarchical [ris.k] / [link.k.m] sections; unknown keys are
// rejected.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riscap/types.hpp"

namespace riscap {

/// Mean direction (azimuth/elevation) and Gaussian angle spread, radians.
struct AngularSpec {
  double azimuth_rad = 0.0;
  double elevation_rad = 0.0;
  double spread_rad = 0.0;
};

enum class CorrelationMode { identity, angular };

/// Antenna-side (TX or RX) correlation description: identity, or a uniform
/// linear array along the x-axis with an angular power spectrum.
struct ArraySpec {
  CorrelationMode mode = CorrelationMode::identity;
  double spacing_m = 0.0;  // element spacing; 0 means lambda/2
  AngularSpec angles;
};

struct RisSpec {
  int rows = 0;
  int cols = 0;
  double spacing_m = 0.0;
  CorrelationMode mode = CorrelationMode::angular;
  AngularSpec outgoing;
};

struct SolverSettings {
  double step = 0.1;              // gradient-ascent step epsilon
  double tolerance = 1e-9;        // fixed-point convergence delta
  double phase_tolerance = 1e-6;  // phase-update convergence delta
  int max_iters = 500;
  double damping = 0.5;  // initial Picard damping alpha
};

struct McSettings {
  int samples_mean = 20000;
  int samples_var = 50000;
  int samples_experiment = 2000;
};

/// Per-experiment sweep grids; defaults reproduce the desk-scale runs.
struct ExperimentGrids {
  std::vector<double> sigma_grid_deg = {2, 4, 8, 15, 25, 40};
  std::vector<double> phi_max_grid_deg = {10, 30, 50, 70, 90, 110};
  std::vector<int> tx_counts = {1, 2, 3, 4};
  int mu_points = 11;
  int cdf_points = 60;
};

struct ScenarioConfig {
  int num_txs = 0;   // M
  int num_riss = 0;  // K
  int nt = 0;
  int nr = 0;
  int ns = 0;  // rows * cols, per RIS

  double snr_db = 0.0;         // rho, dB
  double direct_snr_db = 0.0;  // rho_d, dB; -inf disables the direct links
  double wavelength_m = 0.0;

  std::vector<RisSpec> riss;                      // size K
  std::vector<std::vector<AngularSpec>> incoming; // [k][m]
  ArraySpec tx_side;
  ArraySpec rx_side;

  SolverSettings solver;
  McSettings mc;
  ExperimentGrids grids;
  uint64_t seed = 1;
  std::optional<int> quantization_bits;

  // Materialized by validate().
  double snr = 0.0;
  double direct_snr = 0.0;
  double beta_r = 0.0;
  double beta_s = 0.0;
  std::vector<std::vector<Vec3>> positions;      // [k][n], meters
  std::vector<Vec3> q_out;                       // [k], outgoing wave vector
  std::vector<std::vector<Vec3>> q_in;           // [k][m], incoming wave vectors

  bool validated = false;
};

/// Planar rectangular lattice in the x-y plane, centered at the origin,
/// row-major ordering (surface normal = +z).
std::vector<Vec3> build_ris_grid(int rows, int cols, double spacing_m);

/// Wave vector of norm 2*pi/lambda. Azimuth is measured in the x-y plane
/// from +x, elevation from the plane towards +z.
Vec3 wavevector(double azimuth_rad, double elevation_rad, double wavelength_m);

/// Checks every invariant and materializes derived quantities (linear SNRs,
/// beta ratios, element positions, wave vectors). Throws config_error naming
/// the offending field.
ScenarioConfig validate(ScenarioConfig config);

/// Parse a scenario file (INI-style key-value text). Unknown sections or
/// keys raise config_error.
ScenarioConfig load_scenario_file(const std::string& path);
ScenarioConfig parse_scenario(const std::string& text);

/// Canonical text form of a validated config; hashing and provenance use it.
std::string canonical_scenario_text(const ScenarioConfig& config);

/// FNV-1a 64-bit hash of the canonical text, rendered as fixed-width hex.
std::string scenario_hash(const ScenarioConfig& config);

/// Per-TX input covariances, fixed to rho * I_nt (trace rho * nt).
struct InputCovariance {
  std::vector<MatC> q;       // per m, nt x nt Hermitian PSD
  std::vector<MatC> q_sqrt;  // cached PSD square roots
};

InputCovariance make_input_covariance(const ScenarioConfig& config);
InputCovariance make_input_covariance(std::vector<MatC> q);

}  // namespace riscap

// SPDX-License-Identifier: Apache-2.0
//
// Phase-configuration design against the asymptotic objective: rank-one
// (vanishing angle spread) gradient ascent, full gradient ascent with joint
// parameter updates, the independent TX-RIS pairing shortcut, and phase
// quantization.

#pragma once

#include <optional>
#include <utility>

#include "riscap/detequiv.hpp"
#include "riscap/phase_config.hpp"

namespace riscap {

/// Relative TX priorities. Valid forms: nonincreasing nonnegative mu summing
/// to 1, or the sum-rate shorthand (0, ..., 0, 1). delta[l] = mu_l - mu_{l+1}
/// are the per-prefix weights of the telescoped objective.
struct PriorityWeights {
  VecD mu;
  VecD delta;

  int num_txs() const { return static_cast<int>(mu.size()); }
  bool prefix_active(int len) const { return delta[len - 1] > 0.0; }

  static PriorityWeights sum_rate(int num_txs);
  static PriorityWeights validated(VecD mu);
};

/// RIS element positions and per-(k,m) wave-vector differences
/// dq = q_out,k - q_in,km.
struct SteeringGeometry {
  std::vector<std::vector<Vec3>> positions;  // [k]
  std::vector<std::vector<Vec3>> dq;         // [k][m]
  int ns = 0;
};

SteeringGeometry steering_geometry(const ScenarioConfig& config);

/// Per-prefix fixed-point states, index l-1 for prefix {1..l}. Only entries
/// whose prefix weight is positive need to be populated.
using PrefixStates = std::vector<FixedPointState>;

/// kappa = (1/ns) sum_n exp(i (phi_n - dq . x_n)); |kappa| <= 1.
cxd kappa(const VecD& phases, const std::vector<Vec3>& positions, const Vec3& dq);

/// Priority-weighted rank-one objective
/// sum_k sum_l (mu_l - mu_{l+1}) sum_{m<=l} log(1 + ns^2 t1_l[k] r2_l[k,m] |kappa_km|^2).
double rank_one_objective(const SteeringGeometry& geo, const PhaseConfig& phases,
                          const PriorityWeights& weights, const PrefixStates& states,
                          int num_riss);

struct OptimizerReport {
  double final_objective = 0.0;
  int iterations = 0;
  std::vector<double> trajectory;
  bool converged = false;
};

/// Gradient ascent on the rank-one objective at fixed scalar parameters;
/// each RIS is optimized independently. Steps that would lower the objective
/// are rejected and halve the step; ten consecutive rejections raise
/// numerical_error.
std::pair<PhaseConfig, OptimizerReport> semi_optimal_ascend(
    const PhaseConfig& phi0, const SteeringGeometry& geo, const PriorityWeights& weights,
    const PrefixStates& states, double eps, double tol, int max_iters);

struct SemiResult {
  PhaseConfig phases;
  PrefixStates states;  // rank-one surrogate states at the final phases
  OptimizerReport report;
};

/// Outer driver: alternates rank-one parameter refresh with ascent sweeps.
/// Default schedule interleaves one sweep per refresh; two_phase runs the
/// inner ascent to convergence before each refresh.
SemiResult optimize_semi(const CorrelationSet& corr, const InputCovariance& q,
                         const SteeringGeometry& geo, const PriorityWeights& weights,
                         const SolverSettings& solver, bool two_phase = false);

struct FullAscentOptions {
  double eps = 0.1;
  double tolerance = 1e-9;        // scalar-parameter change threshold
  double phase_tolerance = 1e-6;  // phase change threshold
  int max_iters = 500;
  std::optional<PhaseConfig> init;  // defaults to Phi = I
};

struct FullResult {
  PhaseConfig phases;
  PrefixStates states;  // converged fixed points at the final phases
  OptimizerReport report;
};

/// Full gradient ascent with joint parameter/phase updates: per iteration
/// and RIS, B = (I + t1 r2 S_t Phi^H S_r Phi)^{-1} feeds both the scalar
/// parameter refresh and the phase step eps * sum_m Im[B]_nn. Exhausting
/// max_iters returns the best configuration seen, flagged unconverged.
FullResult full_gradient_ascend(const CorrelationSet& corr, const InputCovariance& q,
                                const PriorityWeights& weights, const FullAscentOptions& opts);

/// Analytic gradient of the total mean (nats) with respect to the phases of
/// RIS k at a converged state: grad_n = sum over weighted prefixes and
/// their TXs of 2 Im[(I + t1 r2 S_t Phi^H S_r Phi)^{-1}]_nn.
VecD analytic_phase_gradient(const CorrelationSet& corr, const PriorityWeights& weights,
                             const PrefixStates& states, const PhaseConfig& phases, int k);

/// Closed-form pairing of RIS k with TX k: phi_n = dq_kk . x_n. Requires
/// num_riss <= num_txs.
PhaseConfig independent_pairing(const SteeringGeometry& geo, int num_riss, int num_txs);

/// Nearest point of {2 pi j / 2^bits}; wrapped ties resolve to the smaller
/// angle. Idempotent.
PhaseConfig quantize_phases(const PhaseConfig& phases, int bits);

}  // namespace riscap

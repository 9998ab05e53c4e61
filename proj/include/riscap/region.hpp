// SPDX-License-Identifier: Apache-2.0
//
// Capacity-region boundary tracing: priority-weighted objectives, rate
// extraction by sequential interference cancellation in decreasing-priority
// order, and the two-transmitter mu sweep.

#pragma once

#include <vector>

#include "riscap/phaseopt.hpp"

namespace riscap {

enum class OptimizerMode { identity, semi_optimal, full };

struct RatePoint {
  VecD mu;          // original (possibly unsorted) priorities
  VecD rates;       // per TX, nats
  double sum_rate = 0.0;
  PhaseConfig phases;
  bool optimizer_converged = true;
};

/// mu_M C_M(full set) + sum_l (mu_l - mu_{l+1}) C_l(prefix), each term a
/// total mean (nats) with its own fixed-point solve. mu must be sorted
/// nonincreasing; callers with unsorted priorities pre-sort and keep the
/// permutation (boundary_point does this internally).
double weighted_objective(const CorrelationSet& corr, const InputCovariance& q,
                          const PhaseConfig& phases, const VecD& mu,
                          const SolverSettings& solver);

/// One boundary point: optimize the phases for the weighted objective (or
/// keep Phi = I), then extract rates by SIC in decreasing-priority order,
/// R_{pi(j)} = C({pi(1..j)}) - C({pi(1..j-1)}) at the final phases.
RatePoint boundary_point(const CorrelationSet& corr, const InputCovariance& q,
                         const SteeringGeometry& geo, const VecD& mu, OptimizerMode mode,
                         const SolverSettings& solver);

/// mu1 = 0..1 sweep for M = 2 (mu2 = 1 - mu1); points sorted by R_1.
std::vector<RatePoint> sweep_region(const CorrelationSet& corr, const InputCovariance& q,
                                    const SteeringGeometry& geo, int grid_points,
                                    OptimizerMode mode, const SolverSettings& solver,
                                    int workers = 1);

/// Polymatroid feasibility: sum_{m in S} R_m <= C(S) + slack for every
/// subset S. Exponential in M; intended for small M.
bool polymatroid_feasible(const CorrelationSet& corr, const InputCovariance& q,
                          const PhaseConfig& phases, const VecD& rates,
                          const SolverSettings& solver, double slack);

}  // namespace riscap

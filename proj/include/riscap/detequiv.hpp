// SPDX-License-Identifier: Apache-2.0
//
// Deterministic equivalent of the ergodic sum mutual information: the
// coupled scalar fixed-point system, the asymptotic mean, the Gaussian
// variance via a block coupling matrix, and the outage approximation.

#pragma once

#include <set>
#include <vector>

#include "riscap/correlation.hpp"
#include "riscap/phase_config.hpp"
#include "riscap/scenario.hpp"
#include "riscap/types.hpp"

namespace riscap {

/// Active-transmitter subset (0-based indices).
using TxSubset = std::set<int>;

TxSubset full_subset(int num_txs);

/// The six scalar parameter families. Inactive transmitters hold zeros.
/// Per-(k,m) families are m-major, index p = m*K + k.
struct FixedPointState {
  VecD t_d;  // per m
  VecD r_d;  // per m
  VecD t_1;  // per k
  VecD t_2;  // per (k,m)
  VecD r_2;  // per (k,m)
  VecD r_1;  // per (k,m)
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Analytic moments of the sum mutual information (nats).
struct MIStats {
  double mean_per_tx_antenna = 0.0;
  double mean_total = 0.0;
  double variance = 0.0;
  TxSubset active;
};

/// Sigma_km = S_t^{1/2} Phi^H S_r Phi S_t^{1/2}; Hermitian PSD, invariant
/// under a global phase shift of Phi.
MatC sigma_km(const CorrMat& s_t, const CorrMat& s_r, const VecD& phases);

/// Eigenvalues of every Sigma_km for a given phase configuration. The whole
/// scalar system, the mean, and the variance blocks only need these spectra,
/// so they are computed once per (correlations, phases) pair.
struct SigmaSpectra {
  std::vector<VecD> eigs;  // per (k,m) m-major
  int num_riss = 0;
  int num_txs = 0;

  const VecD& at(int k, int m) const { return eigs[static_cast<size_t>(m) * num_riss + k]; }
};

SigmaSpectra sigma_spectra(const CorrelationSet& corr, const PhaseConfig& phases);

/// Rank-one surrogate spectra: Sigma_km replaced by its vanishing-spread
/// limit ns^2 |kappa_km|^2 (single eigenvalue). Used by the semi-optimal
/// optimizer's parameter refresh.
SigmaSpectra rank_one_spectra(int num_riss, int num_txs, const MatD& ns2_kappa2);

struct SolveOptions {
  double tolerance = 1e-9;
  int max_iters = 500;
  double damping = 0.5;
  bool random_init = false;
  uint64_t init_seed = 0;
};

/// Damped Picard iteration on all six families, restricted to the active
/// subset. Throws numerical_error on non-convergence or NaN.
FixedPointState solve_fixed_point(const CorrelationSet& corr, const InputCovariance& q,
                                  const SigmaSpectra& spectra, const TxSubset& active,
                                  const SolveOptions& opts = {});

/// Asymptotic mean for a converged state (variance left at zero).
MIStats mean_mi(const CorrelationSet& corr, const InputCovariance& q,
                const SigmaSpectra& spectra, const TxSubset& active,
                const FixedPointState& state);

/// The (2M'+4M'K)-dimensional real symmetric coupling matrix over the active
/// transmitters, in block order (dt, 1t, 2t, dr, 1r, 2r), pair index m-major.
MatD assemble_lambda(const CorrelationSet& corr, const InputCovariance& q,
                     const SigmaSpectra& spectra, const TxSubset& active,
                     const FixedPointState& state);

/// Var = -log det(Lambda) with the determinant sign corrected for the
/// structural parity (-1)^(dim/2) of the block layout; a corrected
/// non-positive determinant reports degeneracy instead of a value.
double variance_mi(const MatD& lambda);

/// Convenience: solve + mean + variance in one call.
MIStats evaluate_stats(const CorrelationSet& corr, const InputCovariance& q,
                       const PhaseConfig& phases, const TxSubset& active,
                       const SolveOptions& opts = {}, bool with_variance = true);

/// P(I < rate_threshold) under the Gaussian limit.
double gaussian_outage(const MIStats& stats, double rate_threshold_nats);

}  // namespace riscap

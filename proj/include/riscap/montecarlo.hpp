// SPDX-License-Identifier: Apache-2.0
//
// Independent Monte Carlo oracle: Kronecker-correlated channel draws, exact
// per-realization mutual information, and empirical statistics. Sampling is
// counter-based per (seed, sample index, matrix role), so any worker count
// reproduces the same distribution bit-exactly.

#pragma once

#include <vector>

#include "riscap/correlation.hpp"
#include "riscap/detequiv.hpp"
#include "riscap/phase_config.hpp"
#include "riscap/types.hpp"

namespace riscap {

struct EmpiricalDistribution {
  std::vector<double> sorted_samples;  // nats, ascending
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  int count = 0;
  uint64_t seed = 0;

  /// Empirical P(X <= x).
  double cdf(double x) const;
  double stderr_mean() const { return std::sqrt(variance / count); }
};

/// Effective channels G_tot,m = G_dm + sum_k G_rk Phi_k G_tkm for one sample
/// index. Each leg is a Kronecker-correlated iid CN(0,1) draw scaled by
/// 1/sqrt(nt), drawn independently across both m and k as in the channel
/// model underlying the asymptotic expressions.
std::vector<MatC> sample_channels(const CorrelationSet& corr, const PhaseConfig& phases,
                                  uint64_t seed, uint64_t sample_index);

/// log det(I + sum_{m in active} G_m Q_m G_m^H), nats.
double mi_sample(const std::vector<MatC>& g_tot, const InputCovariance& q,
                 const TxSubset& active);

EmpiricalDistribution mi_statistics(const CorrelationSet& corr, const InputCovariance& q,
                                    const PhaseConfig& phases, const TxSubset& active,
                                    int n_samples, uint64_t seed, int workers = 1);

}  // namespace riscap

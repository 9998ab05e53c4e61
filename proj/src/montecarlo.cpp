// SPDX-License-Identifier: Apache-2.0

#include "riscap/montecarlo.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <thread>

#include "riscap/philox.hpp"

namespace riscap {

double EmpiricalDistribution::cdf(double x) const {
  const auto it = std::upper_bound(sorted_samples.begin(), sorted_samples.end(), x);
  return static_cast<double>(it - sorted_samples.begin()) / sorted_samples.size();
}

namespace {

// Matrix roles in the RNG counter: 0 = direct leg, 1 = RX-RIS leg,
// 2 = RIS-TX leg; k and m are packed alongside.
uint32_t role_id(uint32_t leg, int k, int m) {
  return leg | (static_cast<uint32_t>(k + 1) << 8) | (static_cast<uint32_t>(m + 1) << 16);
}

/// A^{1/2} W B^{1/2} * scale with W iid CN(0,1) drawn from the stream; the
/// column-side factor is conjugated when conj_b is set. Identity-flagged
/// sides skip their multiplication.
MatC kronecker_draw(const CorrMat& a, const CorrMat& b, double scale, bool conj_b,
                    GaussianStream& g) {
  MatC w(a.mat.rows(), b.mat.rows());
  g.fill(w);
  MatC out;
  if (b.identity) {
    out = a.identity ? std::move(w) : MatC(a.sqrt * w);
  } else {
    const MatC right = conj_b ? MatC(b.sqrt.conjugate()) : b.sqrt;
    out = a.identity ? MatC(w * right) : MatC(a.sqrt * w * right);
  }
  out *= scale;
  return out;
}

}  // namespace

std::vector<MatC> sample_channels(const CorrelationSet& corr, const PhaseConfig& phases,
                                  uint64_t seed, uint64_t sample_index) {
  if (phases.num_riss() != corr.num_riss)
    throw numerical_error("sample_channels: phase config has wrong RIS count");
  const double scale = 1.0 / std::sqrt(static_cast<double>(corr.nt));

  std::vector<VecC> coeff(corr.num_riss);
  for (int k = 0; k < corr.num_riss; ++k) coeff[k] = phases.coefficients(k);

  std::vector<MatC> g_tot(corr.num_txs);
  for (int m = 0; m < corr.num_txs; ++m) {
    MatC g = MatC::Zero(corr.nr, corr.nt);
    if (corr.rho_d > 0.0) {
      GaussianStream gs(seed, sample_index, role_id(0, -1, m));
      g = kronecker_draw(corr.r_d[m], corr.t_d[m], scale, /*conj_b=*/true, gs);
    }
    for (int k = 0; k < corr.num_riss; ++k) {
      const int p = corr.pair(k, m);
      // Every leg is independent across both m and k, matching the channel
      // model under which the asymptotic expressions hold. The RIS-side
      // factor of the RX-RIS leg enters unconjugated so that the cascade
      // S_r^{1/2} Phi S_t^{1/2} reproduces Sigma_km and kappa_m.
      GaussianStream gr_stream(seed, sample_index, role_id(1, k, m));
      const MatC g_r =
          kronecker_draw(corr.r_k[k], corr.s_r[k], scale, /*conj_b=*/false, gr_stream);
      GaussianStream gt_stream(seed, sample_index, role_id(2, k, m));
      const MatC g_t =
          kronecker_draw(corr.s_t[p], corr.t_km[p], scale, /*conj_b=*/true, gt_stream);
      g.noalias() += (g_r * coeff[k].asDiagonal()) * g_t;
    }
    g_tot[m] = std::move(g);
  }
  return g_tot;
}

double mi_sample(const std::vector<MatC>& g_tot, const InputCovariance& q,
                 const TxSubset& active) {
  if (g_tot.empty()) return 0.0;
  const Eigen::Index nr = g_tot.front().rows();
  MatC gram = MatC::Zero(nr, nr);
  for (int m : active) {
    const MatC gq = g_tot[m] * q.q_sqrt[m];
    gram.noalias() += gq * gq.adjoint();
  }
  Eigen::LLT<MatC> llt(MatC::Identity(nr, nr) + gram);
  if (llt.info() != Eigen::Success) throw numerical_error("mi_sample: Gram not PD");
  double ld = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < nr; ++i) ld += std::log(l(i, i).real());
  return 2.0 * ld;
}

EmpiricalDistribution mi_statistics(const CorrelationSet& corr, const InputCovariance& q,
                                    const PhaseConfig& phases, const TxSubset& active,
                                    int n_samples, uint64_t seed, int workers) {
  if (n_samples < 2) throw config_error("mi_statistics: need at least 2 samples");
  if (workers < 1) workers = 1;

  std::vector<double> samples(static_cast<size_t>(n_samples));
  std::atomic<int64_t> next{0};
  std::atomic<bool> failed{false};
  auto body = [&]() {
    for (;;) {
      const int64_t i = next.fetch_add(1);
      if (i >= n_samples || failed.load()) return;
      try {
        const auto g = sample_channels(corr, phases, seed, static_cast<uint64_t>(i));
        samples[static_cast<size_t>(i)] = mi_sample(g, q, active);
      } catch (...) {
        failed.store(true);
        return;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw numerical_error("mi_statistics: sampling failed");

  EmpiricalDistribution dist;
  dist.count = n_samples;
  dist.seed = seed;
  // Deterministic reduction in index order, independent of thread schedule.
  long double acc = 0.0L;
  for (double s : samples) acc += s;
  dist.mean = static_cast<double>(acc / n_samples);
  long double sq = 0.0L;
  for (double s : samples) {
    const long double d = s - dist.mean;
    sq += d * d;
  }
  dist.variance = static_cast<double>(sq / (n_samples - 1));
  std::sort(samples.begin(), samples.end());
  dist.sorted_samples = std::move(samples);
  return dist;
}

}  // namespace riscap

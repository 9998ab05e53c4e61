// SPDX-License-Identifier: Apache-2.0

#include "riscap/region.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <thread>

namespace riscap {

namespace {

SolveOptions to_solve_options(const SolverSettings& s) {
  SolveOptions o;
  o.tolerance = s.tolerance;
  o.max_iters = s.max_iters;
  o.damping = s.damping;
  return o;
}

/// Decreasing-priority permutation with index order breaking ties.
std::vector<int> priority_order(const VecD& mu) {
  std::vector<int> order(mu.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return mu[a] > mu[b]; });
  return order;
}

double prefix_mean(const CorrelationSet& corr, const InputCovariance& q,
                   const SigmaSpectra& spectra, const TxSubset& subset,
                   const SolveOptions& opts) {
  if (subset.empty()) return 0.0;
  const FixedPointState st = solve_fixed_point(corr, q, spectra, subset, opts);
  return mean_mi(corr, q, spectra, subset, st).mean_total;
}

}  // namespace

double weighted_objective(const CorrelationSet& corr, const InputCovariance& q,
                          const PhaseConfig& phases, const VecD& mu,
                          const SolverSettings& solver) {
  for (Eigen::Index i = 0; i + 1 < mu.size(); ++i)
    if (mu[i] < mu[i + 1])
      throw config_error("weighted_objective: mu must be sorted nonincreasing");
  const PriorityWeights w = PriorityWeights::validated(mu);
  const SigmaSpectra spectra = sigma_spectra(corr, phases);
  const SolveOptions opts = to_solve_options(solver);
  double obj = 0.0;
  TxSubset prefix;
  for (int len = 1; len <= w.num_txs(); ++len) {
    prefix.insert(len - 1);
    if (w.prefix_active(len))
      obj += w.delta[len - 1] * prefix_mean(corr, q, spectra, prefix, opts);
  }
  return obj;
}

RatePoint boundary_point(const CorrelationSet& corr, const InputCovariance& q,
                         const SteeringGeometry& geo, const VecD& mu, OptimizerMode mode,
                         const SolverSettings& solver) {
  const int num_txs = corr.num_txs;
  if (mu.size() != num_txs) throw config_error("boundary_point: mu length != num_txs");
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (!(mu[i] >= 0.0)) throw config_error("boundary_point: mu must be nonnegative");
  if (std::abs(mu.sum() - 1.0) > 1e-9)
    throw config_error("boundary_point: mu must sum to 1");

  // Work in decreasing-priority order; the objective and SIC prefixes use
  // the permuted transmitter indexing.
  const std::vector<int> order = priority_order(mu);
  VecD mu_sorted(num_txs);
  for (int j = 0; j < num_txs; ++j) mu_sorted[j] = mu[order[j]];
  // Drop any accidental tiny ordering noise.
  PriorityWeights weights = PriorityWeights::validated(mu_sorted);

  // Permuted view of the correlation set: remap per-m families.
  CorrelationSet perm = corr;
  InputCovariance qperm = q;
  SteeringGeometry gperm = geo;
  for (int j = 0; j < num_txs; ++j) {
    const int m = order[j];
    perm.r_d[j] = corr.r_d[m];
    perm.t_d[j] = corr.t_d[m];
    qperm.q[j] = q.q[m];
    qperm.q_sqrt[j] = q.q_sqrt[m];
    for (int k = 0; k < corr.num_riss; ++k) {
      perm.s_t[perm.pair(k, j)] = corr.s_t[corr.pair(k, m)];
      perm.t_km[perm.pair(k, j)] = corr.t_km[corr.pair(k, m)];
      gperm.dq[k][j] = geo.dq[k][m];
    }
  }

  RatePoint point;
  point.mu = mu;
  point.phases = PhaseConfig::identity(corr.num_riss, corr.ns);
  switch (mode) {
    case OptimizerMode::identity:
      break;
    case OptimizerMode::semi_optimal: {
      SemiResult r = optimize_semi(perm, qperm, gperm, weights, solver);
      point.phases = std::move(r.phases);
      point.optimizer_converged = r.report.converged;
      break;
    }
    case OptimizerMode::full: {
      FullAscentOptions fopts;
      fopts.eps = solver.step;
      fopts.tolerance = solver.tolerance;
      fopts.phase_tolerance = solver.phase_tolerance;
      fopts.max_iters = solver.max_iters;
      FullResult r = full_gradient_ascend(perm, qperm, weights, fopts);
      point.phases = std::move(r.phases);
      point.optimizer_converged = r.report.converged;
      break;
    }
  }

  const SigmaSpectra spectra = sigma_spectra(perm, point.phases);
  const SolveOptions opts = to_solve_options(solver);
  point.rates = VecD::Zero(num_txs);
  TxSubset prefix;
  double prev = 0.0;
  for (int j = 0; j < num_txs; ++j) {
    prefix.insert(j);
    const double cur = prefix_mean(perm, qperm, spectra, prefix, opts);
    point.rates[order[j]] = cur - prev;
    prev = cur;
  }
  point.sum_rate = prev;
  return point;
}

std::vector<RatePoint> sweep_region(const CorrelationSet& corr, const InputCovariance& q,
                                    const SteeringGeometry& geo, int grid_points,
                                    OptimizerMode mode, const SolverSettings& solver,
                                    int workers) {
  if (corr.num_txs != 2)
    throw config_error("sweep_region: the mu sweep is defined for num_txs == 2");
  if (grid_points < 2) throw config_error("sweep_region: grid needs at least 2 points");
  if (workers < 1) workers = 1;

  std::vector<RatePoint> points(static_cast<size_t>(grid_points));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= grid_points) return;
      VecD mu(2);
      mu[0] = static_cast<double>(i) / (grid_points - 1);
      mu[1] = 1.0 - mu[0];
      try {
        points[static_cast<size_t>(i)] = boundary_point(corr, q, geo, mu, mode, solver);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  std::stable_sort(points.begin(), points.end(),
                   [](const RatePoint& a, const RatePoint& b) { return a.rates[0] < b.rates[0]; });
  return points;
}

bool polymatroid_feasible(const CorrelationSet& corr, const InputCovariance& q,
                          const PhaseConfig& phases, const VecD& rates,
                          const SolverSettings& solver, double slack) {
  const int num_txs = corr.num_txs;
  const SigmaSpectra spectra = sigma_spectra(corr, phases);
  const SolveOptions opts = to_solve_options(solver);
  for (unsigned mask = 1; mask < (1u << num_txs); ++mask) {
    TxSubset subset;
    double rate_sum = 0.0;
    for (int m = 0; m < num_txs; ++m)
      if (mask & (1u << m)) {
        subset.insert(m);
        rate_sum += rates[m];
      }
    if (rate_sum > prefix_mean(corr, q, spectra, subset, opts) + slack) return false;
  }
  return true;
}

}  // namespace riscap

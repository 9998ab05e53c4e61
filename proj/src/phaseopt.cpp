// SPDX-License-Identifier: Apache-2.0

#include "riscap/phaseopt.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "riscap/linalg.hpp"

namespace riscap {

PriorityWeights PriorityWeights::sum_rate(int num_txs) {
  PriorityWeights w;
  w.mu = VecD::Zero(num_txs);
  w.mu[num_txs - 1] = 1.0;
  w.delta = VecD::Zero(num_txs);
  w.delta[num_txs - 1] = 1.0;
  return w;
}

PriorityWeights PriorityWeights::validated(VecD mu) {
  const int m = static_cast<int>(mu.size());
  if (m < 1) throw config_error("priorities: empty mu");
  for (int i = 0; i < m; ++i)
    if (!(mu[i] >= 0.0)) throw config_error("priorities: mu must be nonnegative");

  // Sum-rate shorthand (0, ..., 0, 1) is accepted as written.
  bool shorthand = (mu[m - 1] == 1.0);
  for (int i = 0; i + 1 < m && shorthand; ++i) shorthand = (mu[i] == 0.0);
  if (shorthand) return sum_rate(m);

  for (int i = 0; i + 1 < m; ++i)
    if (mu[i] < mu[i + 1])
      throw config_error("priorities: mu must be sorted nonincreasing");
  if (std::abs(mu.sum() - 1.0) > 1e-9)
    throw config_error("priorities: mu must sum to 1");

  PriorityWeights w;
  w.delta = VecD::Zero(m);
  for (int l = 0; l < m; ++l) w.delta[l] = mu[l] - (l + 1 < m ? mu[l + 1] : 0.0);
  w.mu = std::move(mu);
  return w;
}

SteeringGeometry steering_geometry(const ScenarioConfig& c) {
  if (!c.validated) throw config_error("steering_geometry: config not validated");
  SteeringGeometry g;
  g.positions = c.positions;
  g.ns = c.ns;
  g.dq.assign(c.num_riss, {});
  for (int k = 0; k < c.num_riss; ++k)
    for (int m = 0; m < c.num_txs; ++m) g.dq[k].push_back(c.q_out[k] - c.q_in[k][m]);
  return g;
}

cxd kappa(const VecD& phases, const std::vector<Vec3>& positions, const Vec3& dq) {
  const Eigen::Index ns = phases.size();
  cxd acc = 0.0;
  for (Eigen::Index n = 0; n < ns; ++n) {
    const double arg = phases[n] - dq.dot(positions[static_cast<size_t>(n)]);
    acc += cxd(std::cos(arg), std::sin(arg));
  }
  return acc / static_cast<double>(ns);
}

namespace {

int pair_index(int k, int m, int num_riss) { return m * num_riss + k; }

/// Rank-one objective restricted to RIS k.
double rank_one_objective_k(const SteeringGeometry& geo, const VecD& phases_k, int k,
                            const PriorityWeights& weights, const PrefixStates& states,
                            int num_riss) {
  const int num_txs = weights.num_txs();
  const double ns2 = static_cast<double>(geo.ns) * geo.ns;
  std::vector<double> kap2(num_txs);
  for (int m = 0; m < num_txs; ++m)
    kap2[m] = std::norm(kappa(phases_k, geo.positions[k], geo.dq[k][m]));
  double obj = 0.0;
  for (int len = 1; len <= num_txs; ++len) {
    if (!weights.prefix_active(len)) continue;
    const FixedPointState& st = states[len - 1];
    for (int m = 0; m < len; ++m)
      obj += weights.delta[len - 1] *
             std::log1p(ns2 * st.t_1[k] * st.r_2[pair_index(k, m, num_riss)] * kap2[m]);
  }
  return obj;
}

/// Per-element ascent direction for RIS k at fixed parameters (the paper's
/// per-iteration imaginary-part update).
VecD rank_one_gradient_k(const SteeringGeometry& geo, const VecD& phases_k, int k,
                         const PriorityWeights& weights, const PrefixStates& states,
                         int num_riss) {
  const int num_txs = weights.num_txs();
  const auto ns = static_cast<Eigen::Index>(geo.positions[k].size());
  const double ns2 = static_cast<double>(ns) * ns;
  VecD grad = VecD::Zero(ns);
  for (int m = 0; m < num_txs; ++m) {
    const cxd km = kappa(phases_k, geo.positions[k], geo.dq[k][m]);
    double coeff = 0.0;
    for (int len = m + 1; len <= num_txs; ++len) {
      if (!weights.prefix_active(len)) continue;
      const FixedPointState& st = states[len - 1];
      const double a = st.t_1[k] * st.r_2[pair_index(k, m, num_riss)];
      coeff += weights.delta[len - 1] * ns * a / (1.0 + ns2 * a * std::norm(km));
    }
    if (coeff == 0.0) continue;
    for (Eigen::Index n = 0; n < ns; ++n) {
      const double arg = geo.dq[k][m].dot(geo.positions[k][static_cast<size_t>(n)]) -
                         phases_k[n];
      grad[n] += coeff * std::imag(km * cxd(std::cos(arg), std::sin(arg)));
    }
  }
  return grad;
}

struct SweepControl {
  double eps;
  double eps0;
  int gain_streak = 0;
  int reject_streak = 0;
};

/// One accepted ascent step for RIS k; rejected candidates halve the step.
/// Returns false when the proposed change is already below tol.
bool ascent_step(const SteeringGeometry& geo, VecD& phases_k, int k,
                 const PriorityWeights& weights, const PrefixStates& states, int num_riss,
                 SweepControl& ctl, double tol, double& objective, int& iterations) {
  for (;;) {
    const VecD grad = rank_one_gradient_k(geo, phases_k, k, weights, states, num_riss);
    const double max_dphi = ctl.eps * grad.cwiseAbs().maxCoeff();
    if (max_dphi < tol) return false;
    ++iterations;
    VecD cand = phases_k + ctl.eps * grad;
    const double cand_obj = rank_one_objective_k(geo, cand, k, weights, states, num_riss);
    if (cand_obj < objective - 1e-12) {
      ctl.eps *= 0.5;
      ctl.gain_streak = 0;
      if (++ctl.reject_streak >= 10)
        throw numerical_error("semi_optimal_ascend: objective keeps dropping after backoff");
      continue;
    }
    ctl.reject_streak = 0;
    if (cand_obj > objective && ++ctl.gain_streak >= 5) {
      ctl.eps = std::min(2.0 * ctl.eps, ctl.eps0);
      ctl.gain_streak = 0;
    }
    phases_k = std::move(cand);
    objective = cand_obj;
    return true;
  }
}

}  // namespace

double rank_one_objective(const SteeringGeometry& geo, const PhaseConfig& phases,
                          const PriorityWeights& weights, const PrefixStates& states,
                          int num_riss) {
  for (int len = 1; len <= weights.num_txs(); ++len)
    if (weights.prefix_active(len) &&
        (static_cast<int>(states.size()) < len || states[len - 1].t_1.size() == 0))
      throw config_error("rank_one_objective: missing state for an active prefix");
  double obj = 0.0;
  for (int k = 0; k < num_riss; ++k)
    obj += rank_one_objective_k(geo, phases.phases[k], k, weights, states, num_riss);
  return obj;
}

std::pair<PhaseConfig, OptimizerReport> semi_optimal_ascend(
    const PhaseConfig& phi0, const SteeringGeometry& geo, const PriorityWeights& weights,
    const PrefixStates& states, double eps, double tol, int max_iters) {
  if (!(eps > 0.0)) throw config_error("semi_optimal_ascend: eps must be > 0");
  const int num_riss = phi0.num_riss();
  PhaseConfig phi = phi0;
  OptimizerReport report;

  std::vector<double> obj_k(num_riss);
  for (int k = 0; k < num_riss; ++k)
    obj_k[k] = rank_one_objective_k(geo, phi.phases[k], k, weights, states, num_riss);
  double total = 0.0;
  for (double o : obj_k) total += o;
  report.trajectory.push_back(total);

  bool all_converged = true;
  for (int k = 0; k < num_riss; ++k) {
    SweepControl ctl{eps, eps, 0, 0};
    bool converged_k = false;
    while (report.iterations < max_iters * num_riss) {
      const double before = obj_k[k];
      if (!ascent_step(geo, phi.phases[k], k, weights, states, num_riss, ctl, tol, obj_k[k],
                       report.iterations)) {
        converged_k = true;
        break;
      }
      total += obj_k[k] - before;
      report.trajectory.push_back(total);
    }
    all_converged = all_converged && converged_k;
  }
  report.converged = all_converged;
  report.final_objective = total;
  return {std::move(phi), std::move(report)};
}

namespace {

/// Rank-one surrogate states for the current phases: Sigma_km is replaced by
/// the single eigenvalue ns^2 |kappa_km|^2.
PrefixStates refresh_rank_one_states(const CorrelationSet& corr, const InputCovariance& q,
                                     const SteeringGeometry& geo, const PhaseConfig& phi,
                                     const PriorityWeights& weights,
                                     const SolveOptions& sopts) {
  MatD ns2k2(corr.num_riss, corr.num_txs);
  for (int k = 0; k < corr.num_riss; ++k)
    for (int m = 0; m < corr.num_txs; ++m)
      ns2k2(k, m) = static_cast<double>(geo.ns) * geo.ns *
                    std::norm(kappa(phi.phases[k], geo.positions[k], geo.dq[k][m]));
  const SigmaSpectra sp = rank_one_spectra(corr.num_riss, corr.num_txs, ns2k2);
  PrefixStates states(weights.num_txs());
  for (int len = 1; len <= weights.num_txs(); ++len) {
    if (!weights.prefix_active(len)) continue;
    TxSubset prefix;
    for (int m = 0; m < len; ++m) prefix.insert(m);
    states[len - 1] = solve_fixed_point(corr, q, sp, prefix, sopts);
  }
  return states;
}

}  // namespace

SemiResult optimize_semi(const CorrelationSet& corr, const InputCovariance& q,
                         const SteeringGeometry& geo, const PriorityWeights& weights,
                         const SolverSettings& solver, bool two_phase) {
  SolveOptions sopts;
  sopts.tolerance = solver.tolerance;
  sopts.max_iters = solver.max_iters;
  sopts.damping = solver.damping;

  SemiResult res;
  res.phases = PhaseConfig::identity(corr.num_riss, corr.ns);
  res.states = refresh_rank_one_states(corr, q, geo, res.phases, weights, sopts);

  if (two_phase) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < 100; ++outer) {
      auto [phi, rep] = semi_optimal_ascend(res.phases, geo, weights, res.states, solver.step,
                                            solver.phase_tolerance, solver.max_iters);
      res.phases = std::move(phi);
      res.states = refresh_rank_one_states(corr, q, geo, res.phases, weights, sopts);
      const double obj =
          rank_one_objective(geo, res.phases, weights, res.states, corr.num_riss);
      res.report.trajectory.push_back(obj);
      res.report.iterations += rep.iterations;
      if (std::abs(obj - prev) < 1e-10 * (1.0 + std::abs(obj)) && rep.converged) {
        res.report.converged = true;
        break;
      }
      prev = obj;
    }
  } else {
    // Interleaved schedule: one ascent step per RIS, then a parameter refresh.
    std::vector<SweepControl> ctl(corr.num_riss,
                                  SweepControl{solver.step, solver.step, 0, 0});
    const int max_outer = 20000;
    for (int outer = 0; outer < max_outer; ++outer) {
      bool any_moved = false;
      for (int k = 0; k < corr.num_riss; ++k) {
        double obj_k = rank_one_objective_k(geo, res.phases.phases[k], k, weights, res.states,
                                            corr.num_riss);
        any_moved |= ascent_step(geo, res.phases.phases[k], k, weights, res.states,
                                 corr.num_riss, ctl[k], solver.phase_tolerance, obj_k,
                                 res.report.iterations);
      }
      res.states = refresh_rank_one_states(corr, q, geo, res.phases, weights, sopts);
      if ((outer & 15) == 0 || !any_moved)
        res.report.trajectory.push_back(
            rank_one_objective(geo, res.phases, weights, res.states, corr.num_riss));
      if (!any_moved) {
        res.report.converged = true;
        break;
      }
    }
  }
  res.report.final_objective =
      rank_one_objective(geo, res.phases, weights, res.states, corr.num_riss);
  return res;
}

// ---------------------------------------------------------------------------
// Full gradient ascent (joint parameter/phase updates)
// ---------------------------------------------------------------------------

namespace {

struct PrefixParams {
  FixedPointState s;
};

double max_abs_diff(const VecD& a, const VecD& b) {
  return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

double state_change(const FixedPointState& a, const FixedPointState& b) {
  double d = 0.0;
  d = std::max(d, max_abs_diff(a.t_d, b.t_d));
  d = std::max(d, max_abs_diff(a.r_d, b.r_d));
  d = std::max(d, max_abs_diff(a.t_1, b.t_1));
  d = std::max(d, max_abs_diff(a.t_2, b.t_2));
  d = std::max(d, max_abs_diff(a.r_2, b.r_2));
  d = std::max(d, max_abs_diff(a.r_1, b.r_1));
  return d;
}

FixedPointState zero_like(const CorrelationSet& corr) {
  FixedPointState s;
  s.t_d = VecD::Zero(corr.num_txs);
  s.r_d = VecD::Zero(corr.num_txs);
  s.t_1 = VecD::Zero(corr.num_riss);
  s.t_2 = VecD::Zero(corr.num_txs * corr.num_riss);
  s.r_2 = VecD::Zero(corr.num_txs * corr.num_riss);
  s.r_1 = VecD::Zero(corr.num_txs * corr.num_riss);
  return s;
}

MatC phase_conjugated(const MatC& s_r, const VecC& coeff) {
  MatC inner = s_r;
  const Eigen::Index ns = s_r.rows();
  for (Eigen::Index a = 0; a < ns; ++a)
    for (Eigen::Index b = 0; b < ns; ++b) inner(a, b) *= std::conj(coeff[a]) * coeff[b];
  return inner;
}

}  // namespace

FullResult full_gradient_ascend(const CorrelationSet& corr, const InputCovariance& q,
                                const PriorityWeights& weights, const FullAscentOptions& opts) {
  if (!(opts.eps > 0.0)) throw config_error("full_gradient_ascend: eps must be > 0");
  const int num_txs = corr.num_txs;
  const int num_riss = corr.num_riss;
  const int nt = corr.nt;
  if (weights.num_txs() != num_txs)
    throw config_error("full_gradient_ascend: mu length must equal num_txs");

  PhaseConfig phi =
      opts.init ? *opts.init : PhaseConfig::identity(num_riss, corr.ns);
  std::vector<FixedPointState> params(num_txs, zero_like(corr));

  std::vector<int> active_prefixes;
  for (int len = 1; len <= num_txs; ++len)
    if (weights.prefix_active(len)) active_prefixes.push_back(len);

  OptimizerReport report;
  double eps = opts.eps;
  double best_obj = -std::numeric_limits<double>::infinity();
  PhaseConfig best_phi = phi;
  int drop_streak = 0;
  int gain_streak = 0;
  double prev_obj = -std::numeric_limits<double>::infinity();
  bool converged = false;

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    std::vector<FixedPointState> next = params;
    std::vector<VecD> dphi(num_riss);
    for (int k = 0; k < num_riss; ++k) dphi[k] = VecD::Zero(corr.ns);
    double objective = 0.0;

    // Per-RIS inversions; Shat_km = S_t Phi^H S_r Phi is shared across
    // prefixes, B depends on the prefix through its scalar prefactor.
    std::vector<std::vector<double>> logdet_s(num_txs + 1);
    for (int len : active_prefixes) logdet_s[len] = {};
    for (int k = 0; k < num_riss; ++k) {
      const VecC coeff = phi.coefficients(k);
      const bool trivial = corr.s_r[k].identity;
      MatC inner;
      if (!trivial) inner = phase_conjugated(corr.s_r[k].mat, coeff);
      for (int len : active_prefixes) {
        FixedPointState& st = params[len - 1];
        FixedPointState& nx = next[len - 1];
        for (int m = 0; m < len; ++m) {
          const int p = pair_index(k, m, num_riss);
          MatC shat;
          if (trivial) {
            shat = corr.s_t[p].identity ? MatC::Identity(corr.ns, corr.ns)
                                        : MatC(corr.s_t[p].mat);
          } else {
            shat = corr.s_t[p].identity ? inner : MatC(corr.s_t[p].mat * inner);
          }
          const double c = st.t_1[k] * st.r_2[p];
          MatC ipa = c * shat;
          ipa += MatC::Identity(corr.ns, corr.ns);
          Eigen::PartialPivLU<MatC> lu(ipa);
          const MatC b = lu.inverse();
          if (!b.allFinite())
            throw numerical_error("full_gradient_ascend: singular I + A");
          // Tr[B Shat] and log det(I + c Shat) feed the updates and the
          // surrogate objective.
          const double tr_bs = (b * shat).trace().real();
          double ld = 0.0;
          for (Eigen::Index i = 0; i < corr.ns; ++i)
            ld += std::log(std::abs(lu.matrixLU()(i, i)));
          logdet_s[len].push_back(ld);
          nx.t_2[p] = st.t_1[k] * tr_bs / nt;
          nx.r_1[p] = st.r_2[p] * tr_bs / nt;
          for (Eigen::Index n = 0; n < corr.ns; ++n)
            dphi[k][n] += weights.delta[len - 1] * std::imag(b(n, n));
        }
      }
    }

    // Small-matrix parameter updates and the surrogate objective, both at
    // the parameter snapshot that produced the B matrices.
    for (int len : active_prefixes) {
      FixedPointState& st = params[len - 1];
      FixedPointState& nx = next[len - 1];

      MatC rt = MatC::Zero(corr.nr, corr.nr);
      for (int m = 0; m < len; ++m) {
        rt += st.r_d[m] * corr.r_d[m].mat;
        for (int k = 0; k < num_riss; ++k)
          rt += st.r_1[pair_index(k, m, num_riss)] * corr.r_k[k].mat;
      }
      double prefix_obj = logdet_identity_plus_hermitian(rt);
      rt += MatC::Identity(corr.nr, corr.nr);
      Eigen::LLT<MatC> rllt(rt);
      if (rllt.info() != Eigen::Success)
        throw numerical_error("full_gradient_ascend: I + R_tilde not PD");
      for (int k = 0; k < num_riss; ++k)
        nx.t_1[k] = rllt.solve(corr.r_k[k].mat).trace().real() / nt;

      for (double ld : logdet_s[len]) prefix_obj += ld;

      for (int m = 0; m < len; ++m) {
        nx.t_d[m] = rllt.solve(corr.r_d[m].mat).trace().real() / nt;
        MatC tt = st.t_d[m] * corr.t_d[m].mat;
        for (int k = 0; k < num_riss; ++k) {
          const int p = pair_index(k, m, num_riss);
          tt += st.t_2[p] * corr.t_km[p].mat;
        }
        prefix_obj += logdet_identity_plus_hermitian(q.q_sqrt[m] * tt * q.q_sqrt[m]);
        MatC tbar = q.q[m] * tt;
        tbar += MatC::Identity(nt, nt);
        Eigen::PartialPivLU<MatC> tlu(tbar);
        nx.r_d[m] = tlu.solve(q.q[m] * corr.t_d[m].mat).trace().real() / nt;
        double coupling = st.r_d[m] * st.t_d[m];
        for (int k = 0; k < num_riss; ++k) {
          const int p = pair_index(k, m, num_riss);
          nx.r_2[p] = tlu.solve(q.q[m] * corr.t_km[p].mat).trace().real() / nt;
          coupling += st.r_1[p] * st.t_1[k] + st.r_2[p] * st.t_2[p];
        }
        prefix_obj -= nt * coupling;
      }
      objective += weights.delta[len - 1] * prefix_obj;
    }

    double param_change = 0.0;
    for (int len : active_prefixes)
      param_change = std::max(param_change, state_change(params[len - 1], next[len - 1]));
    double phase_change = 0.0;
    for (int k = 0; k < num_riss; ++k) {
      phi.phases[k] += eps * dphi[k];
      phase_change = std::max(phase_change, eps * dphi[k].cwiseAbs().maxCoeff());
    }
    // Damped acceptance of the parameter refresh; the undamped joint update
    // can oscillate on spiked Sigma spectra.
    for (int len : active_prefixes) {
      FixedPointState& st = params[len - 1];
      const FixedPointState& nx = next[len - 1];
      const double a = 0.5;
      st.t_d = (1.0 - a) * st.t_d + a * nx.t_d;
      st.r_d = (1.0 - a) * st.r_d + a * nx.r_d;
      st.t_1 = (1.0 - a) * st.t_1 + a * nx.t_1;
      st.t_2 = (1.0 - a) * st.t_2 + a * nx.t_2;
      st.r_2 = (1.0 - a) * st.r_2 + a * nx.r_2;
      st.r_1 = (1.0 - a) * st.r_1 + a * nx.r_1;
    }

    report.trajectory.push_back(objective);
    report.iterations = iter;
    if (objective > best_obj) {
      best_obj = objective;
      best_phi = phi;
    }
    // Scalar step adaptation: halve on sustained objective drops, grow on
    // sustained progress (the gradient scale shrinks like 1/ns near the
    // optimum, so a fixed small step would stretch the tail by ~ns/eps
    // iterations).
    if (objective < prev_obj - 1e-12) {
      gain_streak = 0;
      if (++drop_streak >= 3) {
        eps = std::max(0.5 * eps, opts.eps / 64.0);
        drop_streak = 0;
      }
    } else {
      drop_streak = 0;
      if (++gain_streak >= 25) {
        eps = std::min(2.0 * eps, 1024.0 * opts.eps);
        gain_streak = 0;
      }
    }
    prev_obj = objective;

    if (param_change < opts.tolerance && phase_change < opts.phase_tolerance) {
      converged = true;
      break;
    }
  }

  FullResult res;
  res.phases = converged ? std::move(phi) : std::move(best_phi);
  res.report = std::move(report);
  res.report.converged = converged;

  // Converged fixed points at the returned phases, one per active prefix.
  const SigmaSpectra sp = sigma_spectra(corr, res.phases);
  res.states.assign(num_txs, FixedPointState{});
  SolveOptions sopts;
  sopts.tolerance = opts.tolerance;
  sopts.max_iters = std::max(opts.max_iters, 500);
  for (int len : active_prefixes) {
    TxSubset prefix;
    for (int m = 0; m < len; ++m) prefix.insert(m);
    res.states[len - 1] = solve_fixed_point(corr, q, sp, prefix, sopts);
  }
  res.report.final_objective = best_obj;
  return res;
}

VecD analytic_phase_gradient(const CorrelationSet& corr, const PriorityWeights& weights,
                             const PrefixStates& states, const PhaseConfig& phases, int k) {
  const VecC coeff = phases.coefficients(k);
  const bool trivial = corr.s_r[k].identity;
  MatC inner;
  if (!trivial) inner = phase_conjugated(corr.s_r[k].mat, coeff);
  VecD grad = VecD::Zero(corr.ns);
  for (int len = 1; len <= weights.num_txs(); ++len) {
    if (!weights.prefix_active(len)) continue;
    const FixedPointState& st = states[len - 1];
    for (int m = 0; m < len; ++m) {
      const int p = pair_index(k, m, corr.num_riss);
      MatC shat;
      if (trivial) {
        shat = corr.s_t[p].identity ? MatC::Identity(corr.ns, corr.ns)
                                    : MatC(corr.s_t[p].mat);
      } else {
        shat = corr.s_t[p].identity ? inner : MatC(corr.s_t[p].mat * inner);
      }
      MatC ipa = (st.t_1[k] * st.r_2[p]) * shat;
      ipa += MatC::Identity(corr.ns, corr.ns);
      const MatC b = Eigen::PartialPivLU<MatC>(ipa).inverse();
      for (Eigen::Index n = 0; n < corr.ns; ++n)
        grad[n] += 2.0 * weights.delta[len - 1] * std::imag(b(n, n));
    }
  }
  return grad;
}

PhaseConfig independent_pairing(const SteeringGeometry& geo, int num_riss, int num_txs) {
  if (num_riss > num_txs)
    throw config_error("independent_pairing: requires num_riss <= num_txs");
  PhaseConfig phi = PhaseConfig::identity(num_riss, geo.ns);
  for (int k = 0; k < num_riss; ++k)
    for (int n = 0; n < geo.ns; ++n)
      phi.phases[k][n] = geo.dq[k][k].dot(geo.positions[k][static_cast<size_t>(n)]);
  return phi;
}

PhaseConfig quantize_phases(const PhaseConfig& phases, int bits) {
  if (bits < 1) throw config_error("quantize_phases: bits must be >= 1");
  const int levels = 1 << bits;
  const double step = 2.0 * pi / levels;
  PhaseConfig out = phases;
  for (VecD& ph : out.phases) {
    for (Eigen::Index n = 0; n < ph.size(); ++n) {
      double x = std::fmod(ph[n], 2.0 * pi);
      if (x < 0.0) x += 2.0 * pi;
      x /= step;
      int j0 = static_cast<int>(std::floor(x));
      if (j0 >= levels) j0 = levels - 1;
      const double frac = x - j0;
      int j;
      if (frac < 0.5) {
        j = j0;
      } else if (frac > 0.5) {
        j = j0 + 1;
      } else {
        // Wrapped tie: the upper neighbour of the last level is angle 0.
        j = (j0 + 1 == levels) ? 0 : j0;
      }
      ph[n] = (j % levels) * step;
    }
  }
  out.quantization_bits = bits;
  return out;
}

}  // namespace riscap

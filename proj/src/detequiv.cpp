// SPDX-License-Identifier: Apache-2.0

#include "riscap/detequiv.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "riscap/linalg.hpp"
#include "riscap/philox.hpp"

namespace riscap {

TxSubset full_subset(int num_txs) {
  TxSubset s;
  for (int m = 0; m < num_txs; ++m) s.insert(m);
  return s;
}

MatC sigma_km(const CorrMat& s_t, const CorrMat& s_r, const VecD& phases) {
  const Eigen::Index ns = s_t.mat.rows();
  if (s_r.mat.rows() != ns || phases.size() != ns)
    throw numerical_error("sigma_km: dimension mismatch");
  if (s_t.identity && s_r.identity) return MatC::Identity(ns, ns);
  // [Phi^H S_r Phi]_ab = conj(c_a) S_r(a,b) c_b with c = exp(i phi).
  VecC c(ns);
  for (Eigen::Index n = 0; n < ns; ++n) c[n] = cxd(std::cos(phases[n]), std::sin(phases[n]));
  MatC inner = s_r.mat;
  for (Eigen::Index a = 0; a < ns; ++a)
    for (Eigen::Index b = 0; b < ns; ++b) inner(a, b) *= std::conj(c[a]) * c[b];
  if (s_t.identity) return inner;
  return s_t.sqrt * inner * s_t.sqrt;
}

SigmaSpectra sigma_spectra(const CorrelationSet& corr, const PhaseConfig& phases) {
  if (phases.num_riss() != corr.num_riss)
    throw numerical_error("sigma_spectra: phase config has wrong RIS count");
  SigmaSpectra sp;
  sp.num_riss = corr.num_riss;
  sp.num_txs = corr.num_txs;
  sp.eigs.resize(static_cast<size_t>(corr.num_riss) * corr.num_txs);
  for (int m = 0; m < corr.num_txs; ++m) {
    for (int k = 0; k < corr.num_riss; ++k) {
      const int p = corr.pair(k, m);
      const CorrMat& st = corr.s_t[p];
      const CorrMat& sr = corr.s_r[k];
      if (st.identity && sr.identity) {
        sp.eigs[p] = VecD::Ones(corr.ns);
      } else if (st.identity) {
        // Unitary similarity: spectrum of Phi^H S_r Phi equals that of S_r.
        sp.eigs[p] = psd_eigenvalues(sr.mat);
      } else if (sr.identity) {
        sp.eigs[p] = psd_eigenvalues(st.mat);
      } else {
        sp.eigs[p] = psd_eigenvalues(sigma_km(st, sr, phases.phases[k]));
      }
    }
  }
  return sp;
}

SigmaSpectra rank_one_spectra(int num_riss, int num_txs, const MatD& ns2_kappa2) {
  SigmaSpectra sp;
  sp.num_riss = num_riss;
  sp.num_txs = num_txs;
  sp.eigs.resize(static_cast<size_t>(num_riss) * num_txs);
  for (int m = 0; m < num_txs; ++m)
    for (int k = 0; k < num_riss; ++k) {
      VecD one(1);
      one[0] = ns2_kappa2(k, m);
      sp.eigs[static_cast<size_t>(m) * num_riss + k] = one;
    }
  return sp;
}

namespace {

double trace_of_eigs(const VecD& lambda, double c) {
  // Tr[(I + c Sigma)^{-1} Sigma] from the spectrum.
  double t = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) t += lambda[i] / (1.0 + c * lambda[i]);
  return t;
}

struct Workspace {
  const CorrelationSet& corr;
  const InputCovariance& q;
  const SigmaSpectra& spectra;
  std::vector<int> active;  // sorted active TX indices

  Workspace(const CorrelationSet& c, const InputCovariance& qq, const SigmaSpectra& sp,
            const TxSubset& act)
      : corr(c), q(qq), spectra(sp), active(act.begin(), act.end()) {
    if (static_cast<int>(qq.q.size()) != c.num_txs)
      throw numerical_error("input covariance: wrong TX count");
    for (int m : active)
      if (m < 0 || m >= c.num_txs) throw config_error("active subset: TX index out of range");
  }

  MatC r_tilde(const FixedPointState& s) const {
    MatC rt = MatC::Zero(corr.nr, corr.nr);
    for (int m : active) {
      if (s.t_d.size()) rt += s.r_d[m] * corr.r_d[m].mat;
      for (int k = 0; k < corr.num_riss; ++k) rt += s.r_1[corr.pair(k, m)] * corr.r_k[k].mat;
    }
    return rt;
  }

  MatC t_tilde(const FixedPointState& s, int m) const {
    MatC tt = s.t_d[m] * corr.t_d[m].mat;
    for (int k = 0; k < corr.num_riss; ++k) {
      const int p = corr.pair(k, m);
      tt += s.t_2[p] * corr.t_km[p].mat;
    }
    return tt;
  }
};

FixedPointState zero_state(const CorrelationSet& corr) {
  FixedPointState s;
  s.t_d = VecD::Zero(corr.num_txs);
  s.r_d = VecD::Zero(corr.num_txs);
  s.t_1 = VecD::Zero(corr.num_riss);
  const int pairs = corr.num_txs * corr.num_riss;
  s.t_2 = VecD::Zero(pairs);
  s.r_2 = VecD::Zero(pairs);
  s.r_1 = VecD::Zero(pairs);
  return s;
}

/// One application of the fixed-point map at the current state.
FixedPointState apply_map(const Workspace& w, const FixedPointState& s) {
  const CorrelationSet& corr = w.corr;
  const int nt = corr.nt;
  FixedPointState out = zero_state(corr);

  MatC rbar = w.r_tilde(s);
  rbar += MatC::Identity(corr.nr, corr.nr);
  Eigen::LLT<MatC> rllt(rbar);
  if (rllt.info() != Eigen::Success)
    throw numerical_error("fixed point: I + R_tilde not positive definite");

  for (int k = 0; k < corr.num_riss; ++k)
    out.t_1[k] = rllt.solve(corr.r_k[k].mat).trace().real() / nt;

  for (int m : w.active) {
    out.t_d[m] = rllt.solve(corr.r_d[m].mat).trace().real() / nt;

    MatC tbar = w.q.q[m] * w.t_tilde(s, m);
    tbar += MatC::Identity(nt, nt);
    Eigen::PartialPivLU<MatC> tlu(tbar);
    out.r_d[m] = tlu.solve(w.q.q[m] * corr.t_d[m].mat).trace().real() / nt;
    for (int k = 0; k < corr.num_riss; ++k) {
      const int p = corr.pair(k, m);
      out.r_2[p] = tlu.solve(w.q.q[m] * corr.t_km[p].mat).trace().real() / nt;
      const double g = trace_of_eigs(w.spectra.at(k, m), s.t_1[k] * s.r_2[p]);
      out.t_2[p] = s.t_1[k] * g / nt;
      out.r_1[p] = s.r_2[p] * g / nt;
    }
  }
  return out;
}

double state_distance(const FixedPointState& a, const FixedPointState& b) {
  double d = 0.0;
  auto upd = [&d](const VecD& x, const VecD& y) {
    if (x.size()) d = std::max(d, (x - y).cwiseAbs().maxCoeff());
  };
  upd(a.t_d, b.t_d);
  upd(a.r_d, b.r_d);
  upd(a.t_1, b.t_1);
  upd(a.t_2, b.t_2);
  upd(a.r_2, b.r_2);
  upd(a.r_1, b.r_1);
  return d;
}

bool state_finite(const FixedPointState& s) {
  return s.t_d.allFinite() && s.r_d.allFinite() && s.t_1.allFinite() && s.t_2.allFinite() &&
         s.r_2.allFinite() && s.r_1.allFinite();
}

void lerp_state(FixedPointState& x, const FixedPointState& f, double alpha) {
  x.t_d = (1.0 - alpha) * x.t_d + alpha * f.t_d;
  x.r_d = (1.0 - alpha) * x.r_d + alpha * f.r_d;
  x.t_1 = (1.0 - alpha) * x.t_1 + alpha * f.t_1;
  x.t_2 = (1.0 - alpha) * x.t_2 + alpha * f.t_2;
  x.r_2 = (1.0 - alpha) * x.r_2 + alpha * f.r_2;
  x.r_1 = (1.0 - alpha) * x.r_1 + alpha * f.r_1;
}

}  // namespace

FixedPointState solve_fixed_point(const CorrelationSet& corr, const InputCovariance& q,
                                  const SigmaSpectra& spectra, const TxSubset& active,
                                  const SolveOptions& opts) {
  if (!(opts.tolerance > 0.0)) throw config_error("solve_fixed_point: tolerance must be > 0");
  Workspace w(corr, q, spectra, active);

  FixedPointState x = zero_state(corr);
  if (opts.random_init) {
    UniformStream rng(opts.init_seed, 0, 0xF1u);
    auto randomize = [&](VecD& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 2.0 * rng.next();
    };
    randomize(x.t_d);
    randomize(x.r_d);
    randomize(x.t_1);
    randomize(x.t_2);
    randomize(x.r_2);
    randomize(x.r_1);
  }

  double alpha = opts.damping;
  double prev_residual = std::numeric_limits<double>::infinity();
  int decreasing_streak = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    FixedPointState f = apply_map(w, x);
    if (!state_finite(f)) throw numerical_error("fixed point: NaN/overflow in iteration");
    const double residual = state_distance(f, x);
    if (residual <= opts.tolerance) {
      x = std::move(f);
      x.residual = residual;
      x.iterations = it;
      x.converged = true;
      return x;
    }
    if (residual > prev_residual) {
      alpha = std::max(alpha * 0.5, 1.0 / 64.0);
      decreasing_streak = 0;
    } else if (++decreasing_streak >= 5) {
      alpha = std::min(alpha * 2.0, 1.0);
      decreasing_streak = 0;
    }
    prev_residual = residual;
    lerp_state(x, f, alpha);
  }
  throw numerical_error("fixed point: no convergence after " + std::to_string(opts.max_iters) +
                        " iterations (residual " + std::to_string(prev_residual) + ")");
}

MIStats mean_mi(const CorrelationSet& corr, const InputCovariance& q,
                const SigmaSpectra& spectra, const TxSubset& active,
                const FixedPointState& state) {
  Workspace w(corr, q, spectra, active);
  const int nt = corr.nt;

  double total = logdet_identity_plus_hermitian(w.r_tilde(state));

  for (int m : w.active) {
    for (int k = 0; k < corr.num_riss; ++k) {
      const int p = corr.pair(k, m);
      const double c = state.t_1[k] * state.r_2[p];
      const VecD& lam = spectra.at(k, m);
      for (Eigen::Index i = 0; i < lam.size(); ++i) total += std::log1p(c * lam[i]);
    }
    const MatC sym = q.q_sqrt[m] * w.t_tilde(state, m) * q.q_sqrt[m];
    total += logdet_identity_plus_hermitian(sym);

    double coupling = state.r_d[m] * state.t_d[m];
    for (int k = 0; k < corr.num_riss; ++k) {
      const int p = corr.pair(k, m);
      coupling += state.r_1[p] * state.t_1[k] + state.r_2[p] * state.t_2[p];
    }
    total -= nt * coupling;
  }

  if (!std::isfinite(total)) throw numerical_error("mean_mi: non-finite result");
  MIStats stats;
  stats.mean_total = total;
  stats.mean_per_tx_antenna = total / nt;
  stats.active = active;
  return stats;
}

MatD assemble_lambda(const CorrelationSet& corr, const InputCovariance& q,
                     const SigmaSpectra& spectra, const TxSubset& active,
                     const FixedPointState& state) {
  Workspace w(corr, q, spectra, active);
  const int nt = corr.nt;
  const int ma = static_cast<int>(w.active.size());
  const int kk = corr.num_riss;
  const int pairs = ma * kk;
  const int dim = 2 * ma + 4 * pairs;

  // Block offsets in order (dt, 1t, 2t, dr, 1r, 2r); pair index p = mi*K + k
  // over the active transmitters.
  const int o_dt = 0;
  const int o_1t = o_dt + ma;
  const int o_2t = o_1t + pairs;
  const int o_dr = o_2t + pairs;
  const int o_1r = o_dr + ma;
  const int o_2r = o_1r + pairs;

  MatC rbar = w.r_tilde(state);
  rbar += MatC::Identity(corr.nr, corr.nr);
  Eigen::LLT<MatC> rllt(rbar);
  if (rllt.info() != Eigen::Success)
    throw numerical_error("assemble_lambda: I + R_tilde not positive definite");

  std::vector<MatC> xd(ma), xk(kk);
  for (int i = 0; i < ma; ++i) xd[i] = rllt.solve(corr.r_d[w.active[i]].mat);
  for (int k = 0; k < kk; ++k) xk[k] = rllt.solve(corr.r_k[k].mat);

  std::vector<std::vector<MatC>> yk(ma);  // per active m, per k
  std::vector<MatC> yd(ma);
  for (int i = 0; i < ma; ++i) {
    const int m = w.active[i];
    MatC tbar = q.q[m] * w.t_tilde(state, m);
    tbar += MatC::Identity(nt, nt);
    Eigen::PartialPivLU<MatC> tlu(tbar);
    yd[i] = tlu.solve(q.q[m] * corr.t_d[m].mat);
    yk[i].resize(kk);
    for (int k = 0; k < kk; ++k) yk[i][k] = tlu.solve(q.q[m] * corr.t_km[corr.pair(k, m)].mat);
  }

  MatD lam = MatD::Zero(dim, dim);
  auto pair_idx = [kk](int mi, int k) { return mi * kk + k; };

  for (int i = 0; i < ma; ++i) {
    // M_dt: diagonal in (m, m').
    lam(o_dt + i, o_dt + i) = -(yd[i] * yd[i]).trace().real() / nt;
    for (int j = 0; j < ma; ++j) {
      lam(o_dr + i, o_dr + j) = -(xd[i] * xd[j]).trace().real() / nt;  // M_dr
    }
    lam(o_dt + i, o_dr + i) = -1.0;
    lam(o_dr + i, o_dt + i) = -1.0;
  }

  for (int i = 0; i < ma; ++i) {
    const int m = w.active[i];
    for (int k = 0; k < kk; ++k) {
      const int p = pair_idx(i, k);
      const int pc = corr.pair(k, m);
      const double t1 = state.t_1[k];
      const double r2 = state.r_2[pc];
      const double c = t1 * r2;
      const VecD& l = spectra.at(k, m);
      double a1 = 0.0, a2 = 0.0;  // Tr[Sbar^-2 Sigma], Tr[Sbar^-2 Sigma^2]
      for (Eigen::Index e = 0; e < l.size(); ++e) {
        const double d = 1.0 + c * l[e];
        a1 += l[e] / (d * d);
        a2 += l[e] * l[e] / (d * d);
      }
      lam(o_1t + p, o_1t + p) = -r2 * r2 * a2 / nt;  // M_1t
      lam(o_2r + p, o_2r + p) = -t1 * t1 * a2 / nt;  // M_2r
      lam(o_1t + p, o_2r + p) = a1 / nt;             // M_12
      lam(o_2r + p, o_1t + p) = a1 / nt;
      lam(o_1t + p, o_1r + p) = -1.0;
      lam(o_1r + p, o_1t + p) = -1.0;
      lam(o_2t + p, o_2r + p) = -1.0;
      lam(o_2r + p, o_2t + p) = -1.0;

      // M_2dt couples the (k,m) pair with the direct link of the same m.
      const double m2dt = -(yk[i][k] * yd[i]).trace().real() / nt;
      lam(o_2t + p, o_dt + i) = m2dt;
      lam(o_dt + i, o_2t + p) = m2dt;

      // M_2t: same m, any (k, k').
      for (int k2 = 0; k2 < kk; ++k2) {
        const int p2 = pair_idx(i, k2);
        lam(o_2t + p, o_2t + p2) = -(yk[i][k] * yk[i][k2]).trace().real() / nt;
      }

      // M_1dr: R_k against the direct receive correlation of m'.
      for (int j = 0; j < ma; ++j) {
        const double m1dr = -(xk[k] * xd[j]).trace().real() / nt;
        lam(o_1r + p, o_dr + j) = m1dr;
        lam(o_dr + j, o_1r + p) = m1dr;
      }

      // M_1r: dense over pairs, value depends on (k, k') only.
      for (int j = 0; j < ma; ++j)
        for (int k2 = 0; k2 < kk; ++k2)
          lam(o_1r + p, o_1r + pair_idx(j, k2)) = -(xk[k] * xk[k2]).trace().real() / nt;
    }
  }
  return lam;
}

double variance_mi(const MatD& lambda) {
  if (lambda.rows() != lambda.cols() || lambda.rows() % 2 != 0)
    throw numerical_error("variance_mi: matrix must be square with even dimension");
  const auto [logabs, sign] = logabsdet_real(lambda);
  const int half = static_cast<int>(lambda.rows()) / 2;
  const int corrected = (half % 2 == 0) ? sign : -sign;
  if (corrected <= 0)
    throw numerical_error("variance_mi: degenerate coupling matrix (det <= 0)");
  if (!std::isfinite(logabs)) throw numerical_error("variance_mi: non-finite determinant");
  return -logabs;
}

MIStats evaluate_stats(const CorrelationSet& corr, const InputCovariance& q,
                       const PhaseConfig& phases, const TxSubset& active,
                       const SolveOptions& opts, bool with_variance) {
  const SigmaSpectra spectra = sigma_spectra(corr, phases);
  const FixedPointState state = solve_fixed_point(corr, q, spectra, active, opts);
  MIStats stats = mean_mi(corr, q, spectra, active, state);
  if (with_variance)
    stats.variance = variance_mi(assemble_lambda(corr, q, spectra, active, state));
  return stats;
}

double gaussian_outage(const MIStats& stats, double rate_threshold_nats) {
  if (!(stats.variance > 0.0))
    throw numerical_error("gaussian_outage: variance must be positive");
  return normal_cdf((rate_threshold_nats - stats.mean_total) / std::sqrt(stats.variance));
}

}  // namespace riscap

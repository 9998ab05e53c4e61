// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "riscap/detequiv.hpp"
#include "riscap/linalg.hpp"
#include "riscap/phaseopt.hpp"
#include "riscap/philox.hpp"
#include "test_util.hpp"

using namespace riscap;
using testutil::identity_corr;
using testutil::make_scenario;
using testutil::scaled_identity_cov;

namespace {

/// Independent scalar oracle for the direct-only 1x1 system
/// t = 1/(1+r), r = rho/(1+rho t), solved by bisection in r.
std::pair<double, double> scalar_system_bisection(double rho) {
  auto f = [rho](double r) { return rho / (1.0 + rho / (1.0 + r)) - r; };
  double lo = 0.0, hi = rho + 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double r = 0.5 * (lo + hi);
  return {1.0 / (1.0 + r), r};
}

PhaseConfig random_phases(int num_riss, int ns, uint64_t seed) {
  PhaseConfig p = PhaseConfig::identity(num_riss, ns);
  UniformStream u(seed, 0, 7);
  for (auto& ph : p.phases)
    for (Eigen::Index n = 0; n < ph.size(); ++n) ph[n] = 2.0 * pi * u.next();
  return p;
}

}  // namespace

TEST_CASE("zero SNR gives zero mean and vanishing r-parameters") {
  CorrelationSet corr = identity_corr(2, 1, 3, 4, 8, 1.0);
  InputCovariance q = scaled_identity_cov(2, 3, 0.0);
  PhaseConfig phi = PhaseConfig::identity(1, 8);
  SigmaSpectra sp = sigma_spectra(corr, phi);
  FixedPointState st = solve_fixed_point(corr, q, sp, full_subset(2));
  CHECK(st.converged);
  CHECK(st.r_d.cwiseAbs().maxCoeff() == 0.0);
  CHECK(st.r_2.cwiseAbs().maxCoeff() == 0.0);
  CHECK(st.r_1.cwiseAbs().maxCoeff() == 0.0);
  const MIStats stats = mean_mi(corr, q, sp, full_subset(2), st);
  CHECK(std::abs(stats.mean_total) <= 1e-12);
}

TEST_CASE("1x1 direct-only system matches the bisection oracle") {
  const double rho = 10.0;
  CorrelationSet corr = identity_corr(1, 0, 1, 1, 1, 1.0);
  InputCovariance q = scaled_identity_cov(1, 1, rho);
  PhaseConfig phi = PhaseConfig::identity(0, 1);
  SigmaSpectra sp = sigma_spectra(corr, phi);
  SolveOptions opts;
  opts.tolerance = 1e-13;
  FixedPointState st = solve_fixed_point(corr, q, sp, full_subset(1), opts);
  const auto [t_oracle, r_oracle] = scalar_system_bisection(rho);
  CHECK(std::abs(st.t_d[0] - t_oracle) <= 1e-12);
  CHECK(std::abs(st.r_d[0] - r_oracle) <= 1e-12);

  const MIStats stats = mean_mi(corr, q, sp, full_subset(1), st);
  const double expect =
      std::log1p(r_oracle) + std::log1p(rho * t_oracle) - r_oracle * t_oracle;
  CHECK(stats.mean_total == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("sigma_km: unitary phases cancel on identity inputs") {
  CorrMat ident = CorrMat::make_identity(6);
  VecD phases(6);
  phases << 0.3, -1.0, 2.2, 4.0, 0.0, 1.1;
  const MatC sigma = sigma_km(ident, ident, phases);
  CHECK((sigma - MatC::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("sigma_km: rank-one inputs reduce to the kappa form") {
  ScenarioConfig cfg = make_scenario(1, 1, 2, 2, 4, 0.0);
  CorrelationSet corr = build_correlation_set(cfg);
  SteeringGeometry geo = steering_geometry(cfg);
  PhaseConfig phi = random_phases(1, 16, 3);
  const MatC sigma = sigma_km(corr.s_t[0], corr.s_r[0], phi.phases[0]);
  const cxd k = kappa(phi.phases[0], geo.positions[0], geo.dq[0][0]);
  const SteeringVector u = steering_vector(cfg.positions[0], cfg.q_in[0][0]);
  const MatC expect = (256.0 * std::norm(k)) * (u.v * u.v.adjoint());
  CHECK((sigma - expect).cwiseAbs().maxCoeff() <= 1e-10 * 256.0);
}

TEST_CASE("sigma_km: PSD for random phase configurations and global-phase invariant") {
  ScenarioConfig cfg = make_scenario(2, 1, 2, 2, 4, 12.0);
  CorrelationSet corr = build_correlation_set(cfg);
  PhaseConfig phi = random_phases(1, 16, 11);
  const MatC sigma = sigma_km(corr.s_t[0], corr.s_r[0], phi.phases[0]);
  CHECK_NOTHROW(psd_eigenvalues(sigma));

  PhaseConfig shifted = phi;
  shifted.phases[0].array() += 1.234;
  const MatC sigma2 = sigma_km(corr.s_t[0], corr.s_r[0], shifted.phases[0]);
  CHECK((sigma - sigma2).cwiseAbs().maxCoeff() <= 1e-10 * sigma.cwiseAbs().maxCoeff());
}

TEST_CASE("fixed point: desk-scale scenario converges tightly") {
  ScenarioConfig cfg = make_scenario(2, 1, 4, 8, 8, 10.0);
  CorrelationSet corr = build_correlation_set(cfg);
  InputCovariance q = make_input_covariance(cfg);
  SigmaSpectra sp = sigma_spectra(corr, PhaseConfig::identity(1, 64));
  SolveOptions opts;
  opts.tolerance = 1e-9;
  opts.max_iters = 500;
  FixedPointState st = solve_fixed_point(corr, q, sp, full_subset(2), opts);
  CHECK(st.converged);
  CHECK(st.residual <= 1e-9);
  CHECK(st.iterations <= 500);
  for (int m = 0; m < 2; ++m) CHECK(st.t_d[m] == 0.0);  // no direct link
  CHECK(st.t_1.minCoeff() >= 0.0);
}

TEST_CASE("fixed point: initialization independence") {
  for (uint64_t trial = 0; trial < 4; ++trial) {
    ScenarioConfig cfg = make_scenario(2, 2, 3, 5, 3, 5.0 + 3.0 * trial, 8.0, 0.0);
    CorrelationSet corr = build_correlation_set(cfg);
    InputCovariance q = make_input_covariance(cfg);
    SigmaSpectra sp = sigma_spectra(corr, random_phases(2, 9, trial));
    SolveOptions opts;
    opts.tolerance = 1e-12;
    opts.max_iters = 5000;
    FixedPointState a = solve_fixed_point(corr, q, sp, full_subset(2), opts);
    opts.random_init = true;
    opts.init_seed = trial + 100;
    FixedPointState b = solve_fixed_point(corr, q, sp, full_subset(2), opts);
    CHECK((a.t_d - b.t_d).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((a.r_d - b.r_d).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((a.t_1 - b.t_1).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((a.t_2 - b.t_2).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((a.r_2 - b.r_2).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((a.r_1 - b.r_1).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("mean is monotone in SNR") {
  ScenarioConfig cfg = make_scenario(2, 1, 3, 6, 4, 10.0);
  double prev = -1.0;
  for (double snr_db : {-5.0, 0.0, 5.0, 10.0, 15.0}) {
    cfg.snr_db = snr_db;
    ScenarioConfig c = validate(cfg);
    CorrelationSet corr = build_correlation_set(c);
    InputCovariance q = make_input_covariance(c);
    const MIStats s = evaluate_stats(corr, q, PhaseConfig::identity(1, 16),
                                     full_subset(2), {}, false);
    CHECK(s.mean_total >= prev - 1e-12);
    prev = s.mean_total;
  }
}

TEST_CASE("mean is monotone in the active subset") {
  ScenarioConfig cfg = make_scenario(3, 1, 3, 6, 4, 10.0);
  CorrelationSet corr = build_correlation_set(cfg);
  InputCovariance q = make_input_covariance(cfg);
  PhaseConfig phi = PhaseConfig::identity(1, 16);
  auto mean_of = [&](const TxSubset& s) {
    if (s.empty()) return 0.0;
    return evaluate_stats(corr, q, phi, s, {}, false).mean_total;
  };
  const double m1 = mean_of({0});
  const double m12 = mean_of({0, 1});
  const double m123 = mean_of({0, 1, 2});
  CHECK(m1 <= m12 + 1e-10);
  CHECK(m12 <= m123 + 1e-10);
  CHECK(m1 > 0.0);
}

TEST_CASE("mean: global phase invariance and per-RIS decoupling") {
  ScenarioConfig cfg = make_scenario(2, 2, 3, 5, 4, 8.0);
  CorrelationSet corr = build_correlation_set(cfg);
  InputCovariance q = make_input_covariance(cfg);
  PhaseConfig phi = random_phases(2, 16, 5);
  const MIStats base = evaluate_stats(corr, q, phi, full_subset(2), {}, false);

  PhaseConfig shifted = phi;
  shifted.phases[1].array() += 2.5;
  const MIStats moved = evaluate_stats(corr, q, shifted, full_subset(2), {}, false);
  CHECK(std::abs(base.mean_total - moved.mean_total) <= 1e-9 * (1.0 + base.mean_total));

  // The k=0 log-det term is untouched by changes to the other RIS's phases.
  const MatC s_before = sigma_km(corr.s_t[corr.pair(0, 0)], corr.s_r[0], phi.phases[0]);
  PhaseConfig other = phi;
  other.phases[1] = random_phases(2, 16, 99).phases[1];
  const MatC s_after = sigma_km(corr.s_t[corr.pair(0, 0)], corr.s_r[0], other.phases[0]);
  CHECK((s_before - s_after).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lambda matrix dimensions follow 2M + 4MK") {
  for (auto [m_count, k_count] : {std::pair<int, int>{1, 1}, {2, 2}}) {
    CorrelationSet corr = identity_corr(m_count, k_count, 2, 3, 4, 1.0);
    InputCovariance q = scaled_identity_cov(m_count, 2, 5.0);
    PhaseConfig phi = PhaseConfig::identity(k_count, 4);
    SigmaSpectra sp = sigma_spectra(corr, phi);
    FixedPointState st = solve_fixed_point(corr, q, sp, full_subset(m_count));
    const MatD lambda = assemble_lambda(corr, q, sp, full_subset(m_count), st);
    const int dim = 2 * m_count + 4 * m_count * k_count;
    CHECK(lambda.rows() == dim);
    CHECK(lambda.cols() == dim);
    CHECK((lambda - lambda.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const double var = variance_mi(lambda);
    CHECK(var >= 0.0);
  }
}

TEST_CASE("variance_mi trivial and degenerate cases") {
  CHECK(variance_mi(MatD::Identity(4, 4)) == doctest::Approx(0.0));
  MatD bad = MatD::Identity(2, 2);
  bad(0, 0) = 2.0;  // parity-corrected determinant is negative
  CHECK_THROWS_AS(variance_mi(bad), numerical_error);
  CHECK_THROWS_AS(variance_mi(MatD::Zero(3, 3)), numerical_error);
}

TEST_CASE("variance is O(1) while the mean is O(nt) at fixed ratios") {
  // Identity correlations keep the spectral content fixed while doubling
  // every dimension.
  CorrelationSet small = identity_corr(2, 1, 4, 8, 64, 0.0);
  CorrelationSet big = identity_corr(2, 1, 8, 16, 128, 0.0);
  InputCovariance q_small = scaled_identity_cov(2, 4, 10.0);
  InputCovariance q_big = scaled_identity_cov(2, 8, 10.0);
  const MIStats s = evaluate_stats(small, q_small, PhaseConfig::identity(1, 64),
                                   full_subset(2), {}, true);
  const MIStats b = evaluate_stats(big, q_big, PhaseConfig::identity(1, 128),
                                   full_subset(2), {}, true);
  CHECK(b.mean_total / s.mean_total == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::abs(b.variance - s.variance) <= 0.25 * s.variance);
}

TEST_CASE("gaussian outage") {
  MIStats stats;
  stats.mean_total = 20.0;
  stats.variance = 4.0;
  CHECK(gaussian_outage(stats, 20.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gaussian_outage(stats, 20.0 - 3.0 * 2.0) ==
        doctest::Approx(0.0013498980316300933).epsilon(1e-6));
  double prev = 0.0;
  for (double thr = 10.0; thr <= 30.0; thr += 1.0) {
    const double p = gaussian_outage(stats, thr);
    CHECK(p >= prev);
    prev = p;
  }
  stats.variance = 0.0;
  CHECK_THROWS_AS(gaussian_outage(stats, 20.0), numerical_error);
}

TEST_CASE("solver reports non-convergence with the last residual") {
  CorrelationSet corr = identity_corr(2, 1, 3, 4, 8, 1.0);
  InputCovariance q = scaled_identity_cov(2, 3, 10.0);
  SigmaSpectra sp = sigma_spectra(corr, PhaseConfig::identity(1, 8));
  SolveOptions opts;
  opts.max_iters = 2;
  CHECK_THROWS_AS(solve_fixed_point(corr, q, sp, full_subset(2), opts), numerical_error);
}

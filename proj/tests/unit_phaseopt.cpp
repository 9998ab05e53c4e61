// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "riscap/montecarlo.hpp"
#include "riscap/phaseopt.hpp"
#include "riscap/philox.hpp"
#include "test_util.hpp"

using namespace riscap;
using testutil::make_scenario;

namespace {

FixedPointState handmade_state(int num_txs, int num_riss, double t1, double r2) {
  FixedPointState st;
  st.t_d = VecD::Zero(num_txs);
  st.r_d = VecD::Zero(num_txs);
  st.t_1 = VecD::Constant(num_riss, t1);
  st.t_2 = VecD::Zero(num_txs * num_riss);
  st.r_2 = VecD::Constant(num_txs * num_riss, r2);
  st.r_1 = VecD::Zero(num_txs * num_riss);
  st.converged = true;
  return st;
}

}  // namespace

TEST_CASE("kappa basics") {
  ScenarioConfig cfg = make_scenario(1, 1, 2, 2, 8, 0.0);
  SteeringGeometry geo = steering_geometry(cfg);

  // Matched phases give the maximal modulus kappa = 1.
  VecD matched(cfg.ns);
  for (int n = 0; n < cfg.ns; ++n) matched[n] = geo.dq[0][0].dot(geo.positions[0][n]);
  const cxd k = kappa(matched, geo.positions[0], geo.dq[0][0]);
  CHECK(std::abs(k - cxd(1.0, 0.0)) <= 1e-12);

  // Single element.
  const std::vector<Vec3> one = {Vec3(0.1, 0.2, 0.0)};
  VecD phi1(1);
  phi1[0] = 0.7;
  const Vec3 dq(3.0, -1.0, 0.5);
  const cxd k1 = kappa(phi1, one, dq);
  const double arg = 0.7 - dq.dot(one[0]);
  CHECK(std::abs(k1 - cxd(std::cos(arg), std::sin(arg))) <= 1e-14);
  CHECK(std::abs(k) <= 1.0 + 1e-12);
}

TEST_CASE("kappa: mean square of random phases is 1/ns") {
  ScenarioConfig cfg = make_scenario(1, 1, 2, 2, 20, 0.0);  // ns = 400
  SteeringGeometry geo = steering_geometry(cfg);
  UniformStream u(21, 0, 3);
  double acc = 0.0;
  const int draws = 10000;
  VecD phases(cfg.ns);
  for (int i = 0; i < draws; ++i) {
    for (int n = 0; n < cfg.ns; ++n) phases[n] = 2.0 * pi * u.next();
    acc += std::norm(kappa(phases, geo.positions[0], geo.dq[0][0]));
  }
  acc /= draws;
  CHECK(acc == doctest::Approx(1.0 / cfg.ns).epsilon(0.05));
}

TEST_CASE("rank_one_objective reductions") {
  // kappa = 0 by construction: two elements, phases opposed, dq = 0.
  SteeringGeometry geo;
  geo.ns = 2;
  geo.positions = {{Vec3::Zero(), Vec3(0.06, 0, 0)}};
  geo.dq = {{Vec3::Zero()}};
  PhaseConfig phi = PhaseConfig::identity(1, 2);
  phi.phases[0][1] = pi;
  PriorityWeights w = PriorityWeights::sum_rate(1);
  PrefixStates states = {handmade_state(1, 1, 1.3, 0.7)};
  CHECK(rank_one_objective(geo, phi, w, states, 1) == doctest::Approx(0.0).epsilon(1e-12));

  // M = 1, kappa = 1: log(1 + ns^2 t1 r2).
  phi.phases[0][1] = 0.0;
  const double expect = std::log1p(4.0 * 1.3 * 0.7);
  CHECK(rank_one_objective(geo, phi, w, states, 1) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("priority weights validation") {
  CHECK_NOTHROW(PriorityWeights::sum_rate(3));
  VecD mu(2);
  mu << 0.7, 0.3;
  PriorityWeights w = PriorityWeights::validated(mu);
  CHECK(w.delta[0] == doctest::Approx(0.4));
  CHECK(w.delta[1] == doctest::Approx(0.3));
  mu << 0.3, 0.7;
  CHECK_THROWS_AS(PriorityWeights::validated(mu), config_error);
  mu << 0.7, 0.4;
  CHECK_THROWS_AS(PriorityWeights::validated(mu), config_error);
  VecD shorthand(3);
  shorthand << 0, 0, 1;  // sum-rate special case
  CHECK_NOTHROW(PriorityWeights::validated(shorthand));
}

TEST_CASE("semi-optimal ascent: single TX converges to matched phases") {
  ScenarioConfig cfg = make_scenario(1, 1, 2, 4, 6, 0.0);
  SteeringGeometry geo = steering_geometry(cfg);
  PriorityWeights w = PriorityWeights::sum_rate(1);
  PrefixStates states = {handmade_state(1, 1, 1.0, 0.5)};
  auto [phi, report] = semi_optimal_ascend(PhaseConfig::identity(1, cfg.ns), geo, w, states,
                                           0.1, 1e-7, 20000);
  CHECK(report.converged);
  const cxd k = kappa(phi.phases[0], geo.positions[0], geo.dq[0][0]);
  CHECK(std::abs(k) >= 0.999);
  // Ascent property: trajectory nondecreasing up to tolerance.
  for (size_t i = 1; i < report.trajectory.size(); ++i)
    CHECK(report.trajectory[i] >= report.trajectory[i - 1] - 1e-12);
}

TEST_CASE("semi-optimal driver beats the identity baseline at small spread") {
  ScenarioConfig cfg = make_scenario(2, 1, 4, 8, 6, 0.5);
  CorrelationSet corr = build_correlation_set(cfg);
  InputCovariance q = make_input_covariance(cfg);
  SteeringGeometry geo = steering_geometry(cfg);
  PriorityWeights w = PriorityWeights::sum_rate(2);
  SemiResult semi = optimize_semi(corr, q, geo, w, cfg.solver);
  const TxSubset all = full_subset(2);
  const double base =
      evaluate_stats(corr, q, PhaseConfig::identity(1, cfg.ns), all, {}, false).mean_total;
  const double opt = evaluate_stats(corr, q, semi.phases, all, {}, false).mean_total;
  CHECK(opt > base);
}

TEST_CASE("full ascent matches the semi-optimal solution at vanishing spread") {
  ScenarioConfig cfg = make_scenario(2, 1, 4, 8, 6, 0.0);
  CorrelationSet corr = build_correlation_set(cfg);
  InputCovariance q = make_input_covariance(cfg);
  SteeringGeometry geo = steering_geometry(cfg);
  PriorityWeights w = PriorityWeights::sum_rate(2);

  SemiResult semi = optimize_semi(corr, q, geo, w, cfg.solver);
  FullAscentOptions fopts;
  fopts.eps = 0.1;
  fopts.max_iters = 3000;
  FullResult full = full_gradient_ascend(corr, q, w, fopts);
  CHECK(full.report.converged);
  const TxSubset all = full_subset(2);
  const double v_semi = evaluate_stats(corr, q, semi.phases, all, {}, false).mean_total;
  const double v_full = evaluate_stats(corr, q, full.phases, all, {}, false).mean_total;
  CHECK(std::abs(v_semi - v_full) <= 0.01 * std::max(v_semi, v_full));
  CHECK(full.report.trajectory.back() >= full.report.trajectory.front());
}

TEST_CASE("full ascent: permuting TXs permutes nothing that matters") {
  ScenarioConfig cfg = make_scenario(2, 2, 3, 6, 4, 6.0);
  // Swap the two TXs' incoming angles.
  ScenarioConfig swapped = cfg;
  for (int k = 0; k < 2; ++k) std::swap(swapped.incoming[k][0], swapped.incoming[k][1]);
  swapped = validate(std::move(swapped));

  FullAscentOptions fopts;
  fopts.eps = 0.1;
  fopts.max_iters = 1500;
  for (const ScenarioConfig* c : {&cfg, &swapped}) {
    (void)c;
  }
  CorrelationSet corr_a = build_correlation_set(cfg);
  CorrelationSet corr_b = build_correlation_set(swapped);
  InputCovariance q = make_input_covariance(cfg);
  PriorityWeights w = PriorityWeights::sum_rate(2);
  FullResult a = full_gradient_ascend(corr_a, q, w, fopts);
  FullResult b = full_gradient_ascend(corr_b, q, w, fopts);
  const double va = evaluate_stats(corr_a, q, a.phases, full_subset(2), {}, false).mean_total;
  const double vb = evaluate_stats(corr_b, q, b.phases, full_subset(2), {}, false).mean_total;
  CHECK(va == doctest::Approx(vb).epsilon(1e-8));
}

TEST_CASE("analytic phase gradient matches finite differences") {
  ScenarioConfig cfg = make_scenario(2, 1, 3, 5, 4, 9.0);
  CorrelationSet corr = build_correlation_set(cfg);
  InputCovariance q = make_input_covariance(cfg);
  PriorityWeights w = PriorityWeights::sum_rate(2);
  PhaseConfig phi = PhaseConfig::identity(1, cfg.ns);
  UniformStream u(5, 0, 9);
  for (Eigen::Index n = 0; n < phi.phases[0].size(); ++n)
    phi.phases[0][n] = 2.0 * pi * u.next();

  SolveOptions sopts;
  sopts.tolerance = 1e-13;
  sopts.max_iters = 20000;
  const TxSubset all = full_subset(2);
  auto mean_at = [&](const PhaseConfig& p) {
    const SigmaSpectra sp = sigma_spectra(corr, p);
    const FixedPointState st = solve_fixed_point(corr, q, sp, all, sopts);
    return mean_mi(corr, q, sp, all, st).mean_total;
  };
  const SigmaSpectra sp = sigma_spectra(corr, phi);
  PrefixStates states(2);
  states[1] = solve_fixed_point(corr, q, sp, all, sopts);
  const VecD grad = analytic_phase_gradient(corr, w, states, phi, 0);

  const double h = 1e-6;
  for (int n : {0, 3, 7, 15}) {
    PhaseConfig up = phi, dn = phi;
    up.phases[0][n] += h;
    dn.phases[0][n] -= h;
    const double fd = (mean_at(up) - mean_at(dn)) / (2.0 * h);
    CHECK(grad[n] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("per-RIS separability of the gradient at frozen scalars") {
  ScenarioConfig cfg = make_scenario(2, 2, 3, 5, 4, 9.0);
  CorrelationSet corr = build_correlation_set(cfg);
  InputCovariance q = make_input_covariance(cfg);
  PriorityWeights w = PriorityWeights::sum_rate(2);
  PhaseConfig phi = PhaseConfig::identity(2, cfg.ns);
  const SigmaSpectra sp = sigma_spectra(corr, phi);
  PrefixStates states(2);
  states[1] = solve_fixed_point(corr, q, sp, full_subset(2));

  const VecD g0 = analytic_phase_gradient(corr, w, states, phi, 0);
  PhaseConfig other = phi;
  other.phases[1].array() += 0.8;  // move the other RIS only
  const VecD g0_after = analytic_phase_gradient(corr, w, states, other, 0);
  CHECK((g0 - g0_after).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("independent pairing") {
  ScenarioConfig cfg = make_scenario(2, 2, 3, 5, 4, 0.0);
  SteeringGeometry geo = steering_geometry(cfg);
  PhaseConfig phi = independent_pairing(geo, 2, 2);
  for (int k = 0; k < 2; ++k) {
    const cxd kk = kappa(phi.phases[k], geo.positions[k], geo.dq[k][k]);
    CHECK(std::abs(kk - cxd(1.0, 0.0)) <= 1e-12);
  }
  // Zero wave-vector difference gives the identity configuration.
  SteeringGeometry zero = geo;
  for (auto& row : zero.dq)
    for (Vec3& d : row) d = Vec3::Zero();
  PhaseConfig ident = independent_pairing(zero, 2, 2);
  for (int k = 0; k < 2; ++k) CHECK(ident.phases[k].cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(independent_pairing(geo, 2, 1), config_error);
}

TEST_CASE("phase quantization") {
  PhaseConfig p = PhaseConfig::identity(1, 4);
  p.phases[0] << 0.1, 3.0, pi / 4 + 0.01, 5.9;

  PhaseConfig q1 = quantize_phases(p, 1);
  CHECK(q1.phases[0][0] == 0.0);
  CHECK(q1.phases[0][1] == doctest::Approx(pi));
  PhaseConfig q2 = quantize_phases(p, 2);
  CHECK(q2.phases[0][2] == doctest::Approx(pi / 2));

  // Idempotence.
  PhaseConfig qq = quantize_phases(q2, 2);
  CHECK((qq.phases[0] - q2.phases[0]).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(q2.quantization_bits.has_value());
  CHECK(*q2.quantization_bits == 2);

  // Every quantized value lies on the grid.
  for (int bits : {1, 2, 3}) {
    PhaseConfig q = quantize_phases(p, bits);
    const double step = 2.0 * pi / (1 << bits);
    for (Eigen::Index n = 0; n < q.phases[0].size(); ++n) {
      const double ratio = q.phases[0][n] / step;
      CHECK(std::abs(ratio - std::round(ratio)) <= 1e-12);
    }
  }
  // Wrapped tie at 3*pi/2 with 1 bit resolves to the smaller angle 0.
  PhaseConfig tie = PhaseConfig::identity(1, 1);
  tie.phases[0][0] = 1.5 * pi;
  CHECK(quantize_phases(tie, 1).phases[0][0] == 0.0);
  CHECK_THROWS_AS(quantize_phases(p, 0), config_error);
}

TEST_CASE("objective ordering: identity <= 1-bit <= 2-bit <= continuous") {
  ScenarioConfig cfg = make_scenario(2, 1, 4, 8, 6, 4.0);
  CorrelationSet corr = build_correlation_set(cfg);
  InputCovariance q = make_input_covariance(cfg);
  PriorityWeights w = PriorityWeights::sum_rate(2);
  FullAscentOptions fopts;
  fopts.eps = 0.1;
  fopts.max_iters = 2000;
  FullResult full = full_gradient_ascend(corr, q, w, fopts);
  const TxSubset all = full_subset(2);
  auto value = [&](const PhaseConfig& p) {
    return evaluate_stats(corr, q, p, all, {}, false).mean_total;
  };
  const double v_id = value(PhaseConfig::identity(1, cfg.ns));
  const double v_1 = value(quantize_phases(full.phases, 1));
  const double v_2 = value(quantize_phases(full.phases, 2));
  const double v_c = value(full.phases);
  CHECK(v_id <= v_1 + 1e-9);
  CHECK(v_1 <= v_2 + 1e-9);
  CHECK(v_2 <= v_c + 1e-9);
}

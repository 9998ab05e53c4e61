// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "riscap/scenario.hpp"
#include "test_util.hpp"

using namespace riscap;

TEST_CASE("ris grid basics") {
  auto single = build_ris_grid(1, 1, 0.06);
  REQUIRE(single.size() == 1);
  CHECK(single[0].norm() == 0.0);

  auto grid = build_ris_grid(20, 20, 0.06);
  REQUIRE(grid.size() == 400);
  double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
  for (const Vec3& p : grid) {
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
    CHECK(p.z() == 0.0);
  }
  CHECK(max_x - min_x == doctest::Approx(1.14).epsilon(1e-12));
  CHECK(max_y - min_y == doctest::Approx(1.14).epsilon(1e-12));

  const double d = 0.031;
  auto four = build_ris_grid(2, 2, d);
  REQUIRE(four.size() == 4);
  double nearest = 1e9;
  for (size_t a = 0; a < 4; ++a)
    for (size_t b = a + 1; b < 4; ++b) nearest = std::min(nearest, (four[a] - four[b]).norm());
  CHECK(nearest == doctest::Approx(d).epsilon(1e-12));

  // Deterministic ordering: row-major, byte-for-byte reproducible.
  CHECK(build_ris_grid(3, 5, 0.01) == build_ris_grid(3, 5, 0.01));

  CHECK_THROWS_AS(build_ris_grid(0, 2, 0.1), config_error);
  CHECK_THROWS_AS(build_ris_grid(2, 2, 0.0), config_error);
}

TEST_CASE("wavevector norm and convention") {
  const double lambda = 0.12;
  const double k0 = 2.0 * pi / lambda;
  for (double az : {0.0, 0.7, -2.0})
    for (double el : {0.0, 0.5, 1.2}) {
      const Vec3 k = wavevector(az, el, lambda);
      CHECK(std::abs(k.norm() - k0) <= 1e-12 * k0);
    }
  // Reference direction: zero azimuth/elevation points along +x.
  const Vec3 ref = wavevector(0.0, 0.0, lambda);
  CHECK(ref.x() == doctest::Approx(k0));
  CHECK(ref.y() == 0.0);
  CHECK(ref.z() == 0.0);
  // Periodicity in azimuth.
  const Vec3 a = wavevector(0.3, 0.4, lambda);
  const Vec3 b = wavevector(0.3 + 2.0 * pi, 0.4, lambda);
  CHECK((a - b).norm() <= 1e-9);
  CHECK_THROWS_AS(wavevector(0, 0, 0.0), config_error);
}

TEST_CASE("dB round trip") {
  for (double x : {1e-6, 0.5, 1.0, 10.0, 123.4}) {
    CHECK(db_to_linear(linear_to_db(x)) == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(db_to_linear(-std::numeric_limits<double>::infinity()) == 0.0);
}

TEST_CASE("validate catches violated invariants") {
  ScenarioConfig good = testutil::make_scenario(2, 1, 4, 8, 20, 10.0);
  CHECK(good.validated);
  CHECK(good.ns == 400);
  CHECK(good.beta_r == doctest::Approx(2.0));
  CHECK(good.beta_s == doctest::Approx(100.0));
  CHECK(good.snr == doctest::Approx(10.0));

  ScenarioConfig bad = good;
  bad.ns = 399;
  CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("ns mismatch"), config_error);

  bad = good;
  bad.wavelength_m = 0.0;
  CHECK_THROWS_AS(validate(bad), config_error);

  bad = good;
  bad.incoming[0][0].spread_rad = -0.1;
  CHECK_THROWS_AS(validate(bad), config_error);
}

TEST_CASE("scenario parsing is fail-closed") {
  const std::string base = R"(
[system]
num_txs = 2
num_riss = 1
nt = 4
nr = 8
snr_db = 10.0
wavelength_m = 0.12
[ris]
rows = 4
cols = 4
spacing_m = 0.06
out_elevation_deg = 70
out_spread_deg = 10
[link]
in_elevation_deg = 30
in_spread_deg = 10
[link.1.1]
in_azimuth_deg = 45
[link.1.2]
in_azimuth_deg = -45
)";
  ScenarioConfig c = parse_scenario(base);
  CHECK(c.ns == 16);
  CHECK(c.direct_snr == 0.0);  // default -inf dB
  CHECK(c.incoming[0][0].azimuth_rad == doctest::Approx(deg_to_rad(45)));
  CHECK(c.incoming[0][1].azimuth_rad == doctest::Approx(deg_to_rad(-45)));

  CHECK_THROWS_WITH_AS(parse_scenario(base + "\n[system2]\nx = 1\n"),
                       doctest::Contains("unknown section"), config_error);
  CHECK_THROWS_WITH_AS(parse_scenario(base + "\n[solver]\nstepp = 0.1\n"),
                       doctest::Contains("unknown key"), config_error);
  CHECK_THROWS_AS(parse_scenario("[system]\nnum_txs = 2\nnum_txs = 3\n"), config_error);
  CHECK_THROWS_AS(parse_scenario("num_txs = 2\n"), config_error);
  CHECK_THROWS_AS(parse_scenario("[system]\nnum_txs = abc\n"), config_error);
}

TEST_CASE("canonical text round-trips through the parser") {
  ScenarioConfig c = testutil::make_scenario(2, 2, 4, 8, 6, 7.5);
  c.quantization_bits = 2;
  c = validate(std::move(c));
  const std::string text = canonical_scenario_text(c);
  ScenarioConfig back = parse_scenario(text);
  CHECK(scenario_hash(back) == scenario_hash(c));
  CHECK(back.ns == c.ns);
  CHECK(back.solver.tolerance == c.solver.tolerance);
  REQUIRE(back.quantization_bits.has_value());
  CHECK(*back.quantization_bits == 2);
}

TEST_CASE("input covariance default") {
  ScenarioConfig c = testutil::make_scenario(3, 1, 4, 8, 4, 5.0);
  InputCovariance q = make_input_covariance(c);
  REQUIRE(q.q.size() == 3);
  // Trace normalization rho * nt.
  CHECK(q.q[0].trace().real() == doctest::Approx(c.snr * c.nt).epsilon(1e-12));
  CHECK((q.q_sqrt[1] * q.q_sqrt[1] - q.q[1]).cwiseAbs().maxCoeff() <= 1e-12 * c.snr);
}

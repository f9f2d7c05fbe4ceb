#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "bandwidth.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "montecarlo.hpp"
#include "rng.hpp"
#include "test_util.hpp"

using namespace deconv;
using testutil::case_scenario;
using testutil::check_throws_containing;
using testutil::make_sc;

TEST_CASE("sample_y is a pure function of seed and replicate") {
  const Scenario sc = case_scenario(4, 32, 0.45);
  const std::vector<double> y1 = sample_y(sc, 17, 5);
  const std::vector<double> y2 = sample_y(sc, 17, 5);
  REQUIRE(y1.size() == 32);
  CHECK(y1 == y2);
  const std::vector<double> y3 = sample_y(sc, 17, 6);
  CHECK(y1 != y3);
}

TEST_CASE("sample_y with identity noise returns the X draws themselves") {
  const Scenario sc = make_sc(CharacteristicModel::gaussian(1.0), CharacteristicModel::identity(),
                              CharacteristicModel::gaussian(1.0), 64, 0.5);
  const std::vector<double> y = sample_y(sc, 3, 1);
  for (std::uint64_t i = 0; i < 64; ++i) {
    rng::CounterStream sx(3, 1, i, rng::TAG_X);
    const double x = sc.x_model().sample(sx);
    CHECK(y[i] == x);
  }
}

TEST_CASE("sample_y moments match the noise convolution") {
  // X ~ N(0,1) plus unit-scale Gaussian noise: Var Y = 2.
  const Scenario sc = case_scenario(7, 100000, 0.33);
  const std::vector<double> y = sample_y(sc, 11, 0);
  double mean = 0.0;
  for (const double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double var = 0.0;
  for (const double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(y.size() - 1);
  CHECK(std::abs(mean) < 0.018);                          // 4 sd of the sample mean
  CHECK(var == doctest::Approx(2.0).epsilon(0.02));       // ~4.5 sd of the sample variance
}

TEST_CASE("mc_mise matches a hand-rolled replicate loop bitwise") {
  const Scenario sc = case_scenario(4, 64, 0.45);
  const MiseResult got = mc_mise(sc, 0.5, 8, 99, 1);
  CHECK(got.reps == 8);
  CHECK(got.seed == 99);
  CHECK(got.h == 0.5);
  CHECK(got.std_error > 0.0);

  const GridSpec grid{};
  const DensityEstimate truth = true_fw(sc, grid);
  std::vector<double> ises;
  for (std::uint32_t r = 0; r < 8; ++r) {
    const std::vector<double> y = sample_y(sc, 99, r);
    ises.push_back(ise(estimate(sc, y, 0.5, grid), truth));
  }
  double mean = 0.0;
  for (const double v : ises) mean += v;
  mean /= 8.0;
  double ss = 0.0;
  for (const double v : ises) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / 7.0 / 8.0);
  CHECK(got.mean_ise == mean);
  CHECK(got.std_error == se);
}

TEST_CASE("mc_mise is invariant to the thread count") {
  const Scenario sc = case_scenario(4, 64, 0.45);
  const MiseResult t1 = mc_mise(sc, 0.5, 8, 99, 1);
  const MiseResult t2 = mc_mise(sc, 0.5, 8, 99, 2);
  const MiseResult t0 = mc_mise(sc, 0.5, 8, 99, 0);
  CHECK(t1.mean_ise == t2.mean_ise);
  CHECK(t1.std_error == t2.std_error);
  CHECK(t1.mean_ise == t0.mean_ise);
  CHECK(t1.std_error == t0.std_error);
}

TEST_CASE("mc_mise rep_base shifts the replicate window") {
  const Scenario sc = case_scenario(4, 64, 0.45);
  const MiseResult base = mc_mise(sc, 0.5, 8, 99, 1);
  const MiseResult shifted = mc_mise(sc, 0.5, 8, 99, 1, {}, 8);
  CHECK(base.mean_ise != shifted.mean_ise);
}

TEST_CASE("mc_mise needs at least two replicates") {
  const Scenario sc = case_scenario(4, 64, 0.45);
  check_throws_containing<config_error>([&] { (void)mc_mise(sc, 0.5, 1, 99, 1); }, "reps");
}

TEST_CASE("per-replicate ISE sequence shows no serial correlation") {
  const Scenario sc = case_scenario(4, 48, 0.45);
  const GridSpec grid{};
  const DensityEstimate truth = true_fw(sc, grid);
  const int reps = 64;
  std::vector<double> z;
  for (int r = 0; r < reps; ++r) {
    const std::vector<double> y = sample_y(sc, 7, static_cast<std::uint64_t>(r));
    z.push_back(ise(estimate(sc, y, 0.4, grid), truth));
  }
  double m = 0.0;
  for (const double v : z) m += v;
  m /= reps;
  double num = 0.0, den = 0.0;
  for (int r = 0; r < reps; ++r) {
    den += (z[r] - m) * (z[r] - m);
    if (r + 1 < reps) num += (z[r] - m) * (z[r + 1] - m);
  }
  REQUIRE(den > 0.0);
  CHECK(std::abs(num / den) < 4.0 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("Monte Carlo MISE decreases from n=500 to n=5000") {
  const Scenario small = case_scenario(4, 500, 0.5);
  const Scenario big = case_scenario(4, 5000, 0.5);
  const MiseResult lo = mc_mise(small, 0.0, 20, 3, 1, {}, 0);
  const MiseResult hi = mc_mise(big, 0.0, 20, 3, 1, {}, 1000);
  const double gap = lo.mean_ise - hi.mean_ise;
  CHECK(gap > 2.0 * std::sqrt(lo.std_error * lo.std_error + hi.std_error * hi.std_error));
}

TEST_CASE("rate_study walks the n list in order with partitioned replicates") {
  const Scenario tmpl =
      make_sc(CharacteristicModel::gaussian(1.0), CharacteristicModel::laplace(1.0),
              CharacteristicModel::gaussian(1.0), 200, 0.3, 1.0, 2.0,
              SigmaRule{SigmaRule::Mode::Power, 0.5});
  const std::vector<std::uint64_t> ns{200, 400, 800};
  std::vector<RatePoint> seen;
  const std::vector<RatePoint> pts =
      rate_study(tmpl, ns, HRule::fixed_h(0.4), 4, 5, 1, {},
                 [&](const RatePoint& p) { seen.push_back(p); });
  REQUIRE(pts.size() == 3);
  REQUIRE(seen.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(pts[i].n == ns[i]);
    CHECK(seen[i].n == ns[i]);
    CHECK(pts[i].h == 0.4);
    CHECK(pts[i].std_error > 0.0);
    // sigma follows the power rule of the derived scenario
    const double want = 0.5 * std::pow(static_cast<double>(ns[i]), -1.0 / 7.0);
    CHECK(pts[i].sigma == doctest::Approx(want).epsilon(1e-14));
    CHECK(seen[i].mise == pts[i].mise);
  }
  // point p uses replicates [p*reps, (p+1)*reps)
  const Scenario at400 = tmpl.with_n_sigma(400, std::nullopt);
  const MiseResult direct = mc_mise(at400, 0.4, 4, 5, 1, {}, 4);
  CHECK(pts[1].mise == direct.mean_ise);
  CHECK(pts[1].std_error == direct.std_error);
}

TEST_CASE("rate_study oracle rule takes the per-n optimal bandwidth") {
  const Scenario tmpl =
      make_sc(CharacteristicModel::gaussian(1.0), CharacteristicModel::laplace(1.0),
              CharacteristicModel::gaussian(1.0), 200, 0.3, 1.0, 2.0,
              SigmaRule{SigmaRule::Mode::Power, 0.5});
  const std::vector<std::uint64_t> ns{200, 400, 800};
  const std::vector<RatePoint> pts = rate_study(tmpl, ns, HRule::oracle(), 4, 5, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    const Scenario scn = tmpl.with_n_sigma(ns[i], std::nullopt);
    CHECK(pts[i].h == optimal_bandwidth(scn).h_opt);
  }
}

TEST_CASE("rate_study refuses fewer than three sample sizes") {
  const Scenario sc = case_scenario(4, 200, 0.4);
  const std::vector<std::uint64_t> two{200, 400};
  try {
    (void)rate_study(sc, two, HRule::zero(), 4, 5, 1);
    FAIL_CHECK("expected a config_error for a two-point rate study");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("sample sizes") != std::string::npos);
    CHECK(e.context() == "n_list");
  }
}

TEST_CASE("fit_rate recovers an exact line") {
  const std::vector<double> x{1.0, 2.0, 3.0, 5.0};
  std::vector<double> y;
  for (const double v : x) y.push_back(1.0 - 0.5 * v);
  const RateFit fit = fit_rate(x, y);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("fit_rate input validation") {
  const std::vector<double> x{1.0, 1.0, 1.0};
  const std::vector<double> y{1.0, 2.0, 3.0};
  check_throws_containing<config_error>([&] { (void)fit_rate(x, y); }, "non-constant");
  const std::vector<double> one{1.0};
  check_throws_containing<config_error>([&] { (void)fit_rate(one, one); }, "two points");
  const std::vector<double> three{1.0, 2.0, 3.0};
  const std::vector<double> twov{1.0, 2.0};
  check_throws_containing<config_error>([&] { (void)fit_rate(three, twov); }, "matching");
}

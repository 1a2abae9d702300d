#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "seqdrift/errors.hpp"
#include "seqdrift/evaluation.hpp"

using namespace seqdrift;

namespace {

DetectorConfig ks_config(std::size_t n, std::size_t w, double alpha) {
  std::mt19937_64 rng(12);
  DetectorConfig c;
  c.reference = testing::scalar_reference(testing::normal_sample(rng, n));
  c.window = w;
  c.schedule = ks_asymptotic_threshold(n, w, alpha);
  return c;
}

std::vector<RunRecord> geometric_runs(double alpha, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::geometric_distribution<std::uint64_t> g(alpha);  // failures before the first success
  std::vector<RunRecord> runs;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t length = g(rng) + 1;
    runs.push_back(RunRecord{i, length + 9, length, false});
  }
  return runs;
}

}  // namespace

TEST_CASE("slackness") {
  RunLengthReport r;
  r.mean_T = 1000.0;
  CHECK(slackness(r, 0.001) == doctest::Approx(1.0));
  r.mean_T = 11'000.0;
  CHECK(slackness(r, 0.001) == doctest::Approx(11.0));
  r.mean_T = 32'000.0;
  CHECK(slackness(r, 0.001) == doctest::Approx(32.0));
  CHECK_THROWS_AS(slackness(r, 0.0), InvalidArgument);
}

TEST_CASE("default cap is 100/alpha tests") { CHECK(default_cap(100, 0.01) == 99 + 10'000); }

TEST_CASE("arl reports are deterministic across worker counts") {
  const auto c = ks_config(500, 30, 0.05);
  const auto null_model = ChangePointModel::stationary(DistributionSpec::standard_normal());
  EvaluationOptions o;
  o.n_runs = 60;
  o.seed = 99;
  o.lambda = 20;
  std::vector<RunLengthReport> reports;
  for (unsigned workers : {1u, 4u, 16u}) {
    o.workers = workers;
    reports.push_back(estimate_arl0(c, null_model, o));
  }
  for (const auto& r : reports) {
    REQUIRE(r.runs.size() == 60);
    CHECK(r.mean_T == reports[0].mean_T);
    CHECK(r.standard_error == reports[0].standard_error);
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
      CHECK(r.runs[i].detection_time == reports[0].runs[i].detection_time);
      CHECK(r.runs[i].run_length + c.window - 1 == r.runs[i].detection_time);
    }
  }
  const auto& r = reports[0];
  CHECK(r.q10 <= r.median_T);
  CHECK(r.median_T <= r.q90);
  CHECK(r.p_leq_lambda.has_value());
  CHECK(r.slackness == doctest::Approx(0.05 * r.mean_T));
  o.seed = 100;
  CHECK(estimate_arl0(c, null_model, o).mean_T != r.mean_T);
}

TEST_CASE("censored runs are counted and flagged") {
  auto c = ks_config(200, 20, 0.01);
  c.schedule = ThresholdSchedule::fixed(INFINITY, 20, 0.01);
  EvaluationOptions o;
  o.n_runs = 5;
  o.cap = 50;
  const auto r = estimate_arl0(c, ChangePointModel::stationary(DistributionSpec::standard_normal()), o);
  CHECK(r.censored_count == 5);
  CHECK(r.censoring_bias);
  CHECK(r.mean_T == 31.0);
  CHECK_THROWS_AS(estimate_arl0(c, ChangePointModel(DistributionSpec::standard_normal(),
                                                    DistributionSpec::standard_normal(), 30),
                                o),
                  InvalidArgument);
  c.schedule = ThresholdSchedule::fixed(INFINITY, 20);
  o.cap.reset();
  CHECK_THROWS_AS(estimate_arl0(c, ChangePointModel::stationary(DistributionSpec::standard_normal()), o),
                  InvalidArgument);
}

TEST_CASE("delay accounting") {
  auto c = ks_config(500, 30, 0.01);
  const ChangePointModel shift(DistributionSpec::standard_normal(), DistributionSpec::gaussian({3.0}, {1.0}), 100);
  EvaluationOptions o;
  o.n_runs = 40;
  o.seed = 4;
  const auto r = estimate_delay(c, shift, o);
  CHECK(r.change_point == 100);
  CHECK(r.detected_after_change + static_cast<std::size_t>(std::lround(r.false_alarm_fraction * 40)) +
            r.censored_count ==
        40);
  CHECK(r.mean_delay >= 0.0);
  CHECK(r.mean_delay < 30.0);

  c.schedule = ThresholdSchedule::fixed(-1.0, 30, 0.01);
  const auto all_false = estimate_delay(c, shift, o);
  CHECK(all_false.false_alarm_fraction == 1.0);
  CHECK(std::isnan(all_false.mean_delay));

  CHECK_THROWS_AS(estimate_delay(c, ChangePointModel::stationary(DistributionSpec::standard_normal()), o),
                  InvalidArgument);
  const ChangePointModel early(DistributionSpec::standard_normal(), DistributionSpec::standard_normal(), 10);
  CHECK_THROWS_AS(estimate_delay(c, early, o), InvalidArgument);
}

TEST_CASE("delay without an actual change looks like the residual null run length") {
  const auto c = ks_config(1000, 50, 0.02);
  const auto p = DistributionSpec::standard_normal();
  EvaluationOptions o;
  o.n_runs = 400;
  o.seed = 21;
  const auto delay = estimate_delay(c, ChangePointModel(p, p, 50), o);
  const auto arl = estimate_arl0(c, ChangePointModel::stationary(p), o);
  // A change at tau = w is no change at all: T - tau = L - 1 run by run.
  CHECK(delay.false_alarm_fraction == 0.0);
  CHECK(delay.mean_delay == doctest::Approx(arl.mean_T - 1.0));
}

TEST_CASE("geometric goodness of fit and hazard") {
  const auto runs = geometric_runs(0.02, 2000, 3);
  const auto fit = geometric_goodness_of_fit(runs, 0.02);
  CHECK(fit.degrees_of_freedom == 19);
  CHECK(fit.p_value > 0.01);
  CHECK(geometric_goodness_of_fit(runs, 0.03).p_value < 1e-6);
  CHECK(geometric_goodness_of_fit(geometric_runs(0.04, 2000, 3), 0.02).p_value < 1e-6);

  const auto hazard = empirical_hazard(runs, 100);
  REQUIRE(hazard.size() == 100);
  double total = 0.0;
  for (double h : hazard) total += h;
  CHECK(total / 100 == doctest::Approx(0.02).epsilon(0.2));

  CHECK(survival_deviation(runs, 0.02, 200) < dkw_band(2000, 0.01));
  CHECK(survival_deviation(geometric_runs(0.04, 2000, 3), 0.02, 200) > dkw_band(2000, 0.01));
  CHECK(dkw_band(2000, 0.01) == doctest::Approx(std::sqrt(std::log(200.0) / 4000.0)));
}

TEST_CASE("hazard by hand") {
  // Lengths 1, 2, 2, 3: h1 = 1/4, h2 = 2/3, h3 = 1/1, h4 undefined.
  const std::vector<RunRecord> runs{{0, 1, 1, false}, {1, 2, 2, false}, {2, 2, 2, false}, {3, 3, 3, false}};
  const auto h = empirical_hazard(runs, 4);
  CHECK(h[0] == 0.25);
  CHECK(h[1] == doctest::Approx(2.0 / 3.0));
  CHECK(h[2] == 1.0);
  CHECK(std::isnan(h[3]));
}

TEST_CASE("sweep grid and rows") {
  const auto grid = appendix_grid();
  REQUIRE(grid.size() == 10);
  CHECK(grid.front().w == 100);
  CHECK(grid.front().n == 3000);
  CHECK(grid.back().w == 300);
  CHECK(grid.back().n == 30'000);

  SweepOptions o;
  o.alpha = 0.05;
  o.n_runs = 30;
  o.seed = 5;
  const auto row = slackness_point({20, 200}, o);
  CHECK(row.runs == 30);
  CHECK(row.alpha == 0.05);
  CHECK(row.slackness == doctest::Approx(0.05 * row.mean_T));
  o.workers = 7;
  CHECK(slackness_point({20, 200}, o).mean_T == row.mean_T);
}

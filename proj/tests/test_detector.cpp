#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "seqdrift/calibration.hpp"
#include "seqdrift/detector.hpp"
#include "seqdrift/errors.hpp"
#include "seqdrift/streams.hpp"

using namespace seqdrift;

namespace {

DetectorConfig ks_config(std::size_t n, std::size_t w, double h, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  DetectorConfig c;
  c.reference = testing::scalar_reference(testing::normal_sample(rng, n));
  c.window = w;
  c.schedule = ThresholdSchedule::fixed(h, w);
  return c;
}

InstanceSource normal_source(std::uint64_t seed, double mean = 0.0) {
  const auto model = ChangePointModel::stationary(DistributionSpec::gaussian({mean}, {1.0}));
  return [model, seed](std::uint64_t t) { return sample_at(model, t, StreamKey{seed, 0}); };
}

}  // namespace

TEST_CASE("warm-up never tests") {
  Detector d(ks_config(50, 10, -1.0));
  for (int t = 1; t < 10; ++t) {
    CHECK(d.step(std::vector<double>{100.0}) == Decision::none);
    CHECK_FALSE(d.last_statistic().has_value());
  }
  CHECK(d.step(std::vector<double>{100.0}) == Decision::detection);
  CHECK(d.detected_at() == 10);
  CHECK_THROWS_AS(d.step(std::vector<double>{0.0}), StateError);
}

TEST_CASE("unreachable and always-exceeded thresholds") {
  const auto never = run(ks_config(100, 20, INFINITY), normal_source(3, 5.0), 500);
  CHECK(never.censored);
  CHECK(never.time == 500);
  CHECK_FALSE(never.detection_time().has_value());

  const auto always = run(ks_config(100, 20, -1.0), normal_source(3), 500);
  CHECK_FALSE(always.censored);
  CHECK(always.detection_time() == 20);
}

TEST_CASE("run preconditions") {
  const auto c = ks_config(100, 20, 0.5);
  CHECK_THROWS_AS(run(c, normal_source(1), 19), InvalidArgument);
  const auto short_stream = testing::scalars(std::vector<double>(10, 0.0));
  CHECK_THROWS_AS(run(c, short_stream, 100), InvalidArgument);
  auto bad = c;
  bad.schedule = ThresholdSchedule::fixed(0.5, 21);
  CHECK_THROWS_AS(run(bad, normal_source(1), 100), InvalidArgument);
  auto wrong_dim = c;
  wrong_dim.summary = SummaryStatistic::identity(2);
  CHECK_THROWS_AS(wrong_dim.validate(), DimensionMismatch);
}

TEST_CASE("finite streams stop at their end") {
  const auto stream = testing::scalars(std::vector<double>(40, 0.0));
  const auto r = run(ks_config(100, 20, INFINITY), stream, 1000);
  CHECK(r.censored);
  CHECK(r.time == 40);
}

TEST_CASE("trace rows cover every test and no detection precedes w") {
  DetectorOptions opts;
  opts.trace = true;
  auto config = ks_config(200, 30, 0.0);
  config.schedule = ThresholdSchedule::fixed(0.35, 30);
  const auto r = run(config, normal_source(8, 1.0), 1000, opts);
  REQUIRE_FALSE(r.trace.empty());
  CHECK(r.trace.front().t == 30);
  CHECK(r.trace.size() == r.time - 29);
  for (std::size_t i = 0; i + 1 < r.trace.size(); ++i) {
    CHECK_FALSE(r.trace[i].detected);
    CHECK(r.trace[i].statistic <= r.trace[i].threshold);
  }
  CHECK(r.trace.back().detected);
  CHECK(r.trace.back().statistic > r.trace.back().threshold);
}

TEST_CASE("model-loss summaries consume labels") {
  const LinearModel model{{{1.0}}, {}, false};
  DetectorConfig c;
  c.summary = SummaryStatistic::model_loss(model, squared_error, 1, 1);
  c.reference = testing::scalar_reference({0.0, 0.01, 0.02, 0.03});
  c.window = 2;
  c.schedule = ThresholdSchedule::fixed(0.4, 2);
  Detector d(c);
  const std::vector<double> x{1.0};
  const std::vector<double> y{1.0};
  CHECK(d.step(x, std::span<const double>(y)) == Decision::none);
  CHECK(d.step_row(std::vector<double>{2.0, 0.0}) == Decision::detection);  // losses {0, 4}: KS = 0.5
  CHECK_THROWS_AS(Detector(c).step(x), InvalidArgument);
}

TEST_CASE("incremental and full-recompute runs agree") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> sizes(2, 200);
  std::uniform_real_distribution<double> shift(0.0, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto kind = static_cast<StatisticKind>(trial % 3);
    std::size_t n = sizes(rng);
    std::size_t w = sizes(rng);
    std::uint64_t cap = 2000;
    if (kind == StatisticKind::mmd2_u) {
      // brute-force recomputation is quadratic per step; keep the sizes moderate
      n = std::min<std::size_t>(n, 80);
      w = std::max<std::size_t>(2, std::min<std::size_t>(w, 60));
      cap = 600;
    }
    const auto values = testing::normal_sample(rng, n);
    DetectorConfig c;
    c.window = w;
    if (kind == StatisticKind::mmd2_u) {
      const Kernel k = Kernel::rbf(1.0);
      c.reference = std::make_shared<const ReferenceSet>(testing::scalars(values), k);
      c.statistic = {kind, k};
    } else {
      c.reference = testing::scalar_reference(values);
      c.statistic = {kind, {}};
    }
    const double h = kind == StatisticKind::ks ? 0.3 + 0.5 * shift(rng) / 1.5
                     : kind == StatisticKind::mean_diff ? -0.3 - shift(rng) / 2
                                                        : 0.05 + shift(rng) / 10;
    c.schedule = ThresholdSchedule::fixed(h, w);
    const auto model = ChangePointModel(DistributionSpec::standard_normal(), DistributionSpec::gaussian({shift(rng)}, {1.0}),
                                        w + cap / 4);
    const StreamKey key{static_cast<std::uint64_t>(trial), 0};
    const InstanceSource source = [&](std::uint64_t t) { return sample_at(model, t, key); };
    DetectorOptions fast;
    DetectorOptions slow;
    slow.incremental = false;
    const auto a = run(c, source, cap, fast);
    const auto b = run(c, source, cap, slow);
    CHECK(a.time == b.time);
    CHECK(a.censored == b.censored);
  }
}

TEST_CASE("larger thresholds never detect earlier") {
  auto c = ks_config(300, 40, 0.0, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::optional<std::uint64_t> previous;
    for (double h : {0.2, 0.25, 0.3, 0.35}) {
      c.schedule = ThresholdSchedule::fixed(h, 40);
      const auto r = run(c, normal_source(seed, 0.3), 3000);
      const std::uint64_t t = r.time;
      if (previous) CHECK(t >= *previous);
      previous = t;
    }
  }
}

TEST_CASE("a five-sigma shift is caught at the first test") {
  std::mt19937_64 rng(55);
  auto reference = testing::scalar_reference(testing::normal_sample(rng, 3000));
  DetectorConfig c;
  c.reference = reference;
  c.window = 100;
  c.schedule = calibrate_schedule(reference, 100, {0.01, {}}, 150, 2000, {}, 7).schedule;
  int first_test = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = run(c, normal_source(seed, 5.0), 1000);
    if (r.detection_time() == 100) ++first_test;
  }
  CHECK(first_test >= 99);
}

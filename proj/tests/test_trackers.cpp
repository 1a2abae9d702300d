#include <doctest.h>

#include <deque>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "seqdrift/errors.hpp"
#include "seqdrift/trackers.hpp"

using namespace seqdrift;

TEST_CASE("ks tracker matches the oracle while sliding") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const bool tied = trial % 2 == 0;
    const std::size_t n = 2 + trial * 3;
    const std::size_t w = 1 + trial % 17;
    const auto ref_values = tied ? testing::tied_sample(rng, n, 5) : testing::normal_sample(rng, n);
    KsTracker tracker(testing::scalar_reference(ref_values), w);
    std::deque<double> window;
    const auto stream = tied ? testing::tied_sample(rng, 300, 7) : testing::normal_sample(rng, 300, 0.4);
    for (double x : stream) {
      tracker.add(x);
      window.push_back(x);
      if (window.size() > w) {
        tracker.remove(window.front());
        window.pop_front();
      }
      if (window.size() == w) {
        const std::vector<double> win(window.begin(), window.end());
        REQUIRE(tracker.scaled() == oracle::ks_scaled(ref_values, win));
        CHECK(tracker.value() == oracle::ks(ref_values, win));
      }
    }
  }
}

TEST_CASE("window statistic: incremental equals full recomputation") {
  std::mt19937_64 rng(32);
  const auto ref_values = testing::normal_sample(rng, 120);
  const auto scalar_ref = testing::scalar_reference(ref_values);
  const Kernel k = Kernel::rbf(0.9);
  auto kernel_ref = std::make_shared<const ReferenceSet>(scalar_ref->with_kernel(k));
  const auto stream = testing::normal_sample(rng, 3000, 0.2);

  for (const StatisticSpec& spec : {StatisticSpec{StatisticKind::ks, {}}, StatisticSpec{StatisticKind::mean_diff, {}},
                                    StatisticSpec{StatisticKind::mmd2_u, k}}) {
    const auto ref = spec.kind == StatisticKind::mmd2_u ? kernel_ref : scalar_ref;
    WindowStatistic fast(spec, ref, 25, {true, 500});
    WindowStatistic slow(spec, ref, 25, {false, 500});
    for (double x : stream) {
      fast.push(Summary::scalar(x));
      slow.push(Summary::scalar(x));
      REQUIRE(fast.ready() == slow.ready());
      if (!fast.ready()) continue;
      if (spec.kind == StatisticKind::ks) {
        REQUIRE(fast.value() == slow.value());
      } else {
        REQUIRE(std::abs(fast.value() - slow.value()) <= 1e-9 * std::max(1.0, std::abs(slow.value())));
      }
    }
  }
}

TEST_CASE("bootstrap pushes of reference items match ordinary pushes") {
  std::mt19937_64 rng(33);
  const Kernel k = Kernel::rbf(1.1);
  auto ref = std::make_shared<const ReferenceSet>(testing::scalars(testing::normal_sample(rng, 50)), k);
  WindowStatistic hinted({StatisticKind::mmd2_u, k}, ref, 10);
  WindowStatistic plain({StatisticKind::mmd2_u, k}, ref, 10);
  std::uniform_int_distribution<std::size_t> pick(0, 49);
  for (int i = 0; i < 500; ++i) {
    const auto j = pick(rng);
    hinted.push_reference_item(j);
    plain.push(ref->summaries()[j]);
    if (plain.ready()) CHECK(std::abs(hinted.value() - plain.value()) < 1e-9);
  }
}

TEST_CASE("statistic validation") {
  const auto scalar_ref = testing::scalar_reference({0, 1, 2});
  auto vector_ref = std::make_shared<const ReferenceSet>(std::vector<Summary>{Summary({0, 0}), Summary({1, 1})});
  CHECK_THROWS_AS(validate_statistic({StatisticKind::ks, {}}, *vector_ref, 2), InvalidArgument);
  CHECK_THROWS_AS(validate_statistic({StatisticKind::mean_diff, {}}, *vector_ref, 2), InvalidArgument);
  CHECK_THROWS_AS(validate_statistic({StatisticKind::mmd2_u, {}}, *scalar_ref, 2), InvalidArgument);
  CHECK_THROWS_AS(validate_statistic({StatisticKind::mmd2_u, Kernel::rbf(1)}, *scalar_ref, 2), InvalidArgument);
  const auto with_kernel = scalar_ref->with_kernel(Kernel::rbf(1));
  CHECK_NOTHROW(validate_statistic({StatisticKind::mmd2_u, Kernel::rbf(1)}, with_kernel, 2));
  CHECK_THROWS_AS(validate_statistic({StatisticKind::mmd2_u, Kernel::rbf(1)}, with_kernel, 1), InvalidArgument);
  CHECK_THROWS_AS(validate_statistic({StatisticKind::mmd2_u, Kernel::rbf(2)}, with_kernel, 2), InvalidArgument);
  CHECK_THROWS_AS(WindowStatistic({StatisticKind::ks, {}}, vector_ref, 2), InvalidArgument);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "seqdrift/statistics.hpp"

namespace seqdrift {

/// Statistic choice plus the kernel when the statistic needs one.
struct StatisticSpec {
  StatisticKind kind = StatisticKind::ks;
  std::optional<Kernel> kernel;
};

/// Exact KS distance between a fixed scalar reference and a full sliding
/// window, maintained in O(log n) per insertion/removal.
///
/// With r'_1 < ... < r'_k the distinct reference values, the scaled
/// difference D(u) = w * #ref<=u - n * #win<=u is, on each interval
/// [r'_i, r'_{i+1}), largest at r'_i and smallest at the last window point
/// before r'_{i+1}. Two prefix-sum/max trees hold those per-interval extremes;
/// a window point shifts a suffix of each by n.
class KsTracker {
 public:
  KsTracker(std::shared_ptr<const ReferenceSet> reference, std::size_t window);

  void add(double value);
  void remove(double value);
  void reset();

  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  /// max_u |w * #ref<=u - n * #win<=u|; meaningful once count() == window.
  [[nodiscard]] std::int64_t scaled() const noexcept;
  [[nodiscard]] double value() const noexcept;

 private:
  /// Values v_i kept as prefix sums of per-position increments, so adding
  /// a constant to a suffix is a point update. Reports max_i v_i.
  class PrefixMaxTree {
   public:
    explicit PrefixMaxTree(const std::vector<std::int64_t>& values);
    void suffix_add(std::size_t first, std::int64_t delta) noexcept;
    [[nodiscard]] std::int64_t max() const noexcept { return nodes_[1].best; }

   private:
    struct Node {
      std::int64_t sum;
      std::int64_t best;  // max over non-empty prefixes
    };
    void combine(std::size_t node) noexcept;
    std::size_t leaves_ = 1;
    std::vector<Node> nodes_;
  };

  std::vector<std::int64_t> initial_upper() const;
  std::vector<std::int64_t> initial_lower() const;
  void shift(double value, std::int64_t sign);

  std::shared_ptr<const ReferenceSet> reference_;
  std::size_t window_;
  std::vector<double> distinct_;
  std::vector<std::int64_t> cumulative_;  // #ref <= distinct_[j]
  PrefixMaxTree upper_;                   // A_i = w cR_i - n #win<=r'_i
  PrefixMaxTree lower_;                    // -(w cR_i - n #win<r'_{i+1})
  std::size_t count_ = 0;
};

/// Sliding window plus whatever cached structure makes its statistic cheap
/// to update. With `incremental` off every value() is a full recomputation.
class WindowStatistic {
 public:
  struct Options {
    bool incremental = true;
    std::size_t recompute_every = 10'000;
  };

  WindowStatistic(const StatisticSpec& spec, std::shared_ptr<const ReferenceSet> reference,
                  std::size_t window);
  WindowStatistic(const StatisticSpec& spec, std::shared_ptr<const ReferenceSet> reference, std::size_t window,
                  Options options);

  void push(Summary s);
  /// Pushes reference item `index` (a bootstrap draw), reusing cached
  /// reference kernel sums.
  void push_reference_item(std::size_t index);

  [[nodiscard]] bool ready() const noexcept { return window_.full(); }
  /// Statistic for the current window; requires ready().
  [[nodiscard]] double value() const;
  void reset();

  [[nodiscard]] const SlidingWindow& window() const noexcept { return window_; }
  [[nodiscard]] const StatisticSpec& spec() const noexcept { return spec_; }

 private:
  void after_push(const std::optional<Summary>& evicted, double added_scalar);

  StatisticSpec spec_;
  Options options_;
  std::shared_ptr<const ReferenceSet> reference_;
  SlidingWindow window_;
  std::optional<KsTracker> ks_;
};

/// Checks that `spec` can be evaluated against `reference` with windows of
/// size `window`; throws with an actionable message otherwise.
void validate_statistic(const StatisticSpec& spec, const ReferenceSet& reference, std::size_t window);

}  // namespace seqdrift

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "seqdrift/summaries.hpp"

namespace seqdrift {

enum class KernelKind { rbf, linear, constant };

/// Positive-definite kernel on summary space.
struct Kernel {
  KernelKind kind = KernelKind::rbf;
  double bandwidth = 1.0;  // rbf: k(x, y) = exp(-|x - y|^2 / (2 bandwidth^2))
  double constant = 1.0;   // constant: k(x, y) = constant

  static Kernel rbf(double bandwidth);
  static Kernel linear() { return Kernel{KernelKind::linear, 1.0, 1.0}; }
  static Kernel constant_kernel(double c = 1.0) { return Kernel{KernelKind::constant, 1.0, c}; }

  [[nodiscard]] double operator()(std::span<const double> a, std::span<const double> b) const noexcept;
  [[nodiscard]] double operator()(const Summary& a, const Summary& b) const noexcept {
    return (*this)(a.values(), b.values());
  }
  friend bool operator==(const Kernel&, const Kernel&) = default;
};

enum class StatisticKind { ks, mmd2_u, mean_diff };

std::string_view to_string(StatisticKind kind) noexcept;
StatisticKind parse_statistic_kind(std::string_view name);

struct StatisticValue {
  StatisticKind kind = StatisticKind::ks;
  double value = 0.0;
};

/// Pre-change reference summaries S. Immutable once built; the sorted copy
/// (scalar case) and kernel sums (when a kernel is attached) are computed up
/// front so the set can be shared freely between detectors.
class ReferenceSet {
 public:
  explicit ReferenceSet(std::vector<Summary> summaries, std::optional<Kernel> kernel = std::nullopt);

  [[nodiscard]] std::size_t size() const noexcept { return summaries_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return summaries_.front().dim(); }
  [[nodiscard]] bool is_scalar() const noexcept { return dim() == 1; }
  [[nodiscard]] const std::vector<Summary>& summaries() const noexcept { return summaries_; }
  /// Ascending scalar values; empty unless is_scalar().
  [[nodiscard]] const std::vector<double>& sorted_values() const noexcept { return sorted_; }
  /// Mean of the scalar values (scalar case only).
  [[nodiscard]] double scalar_mean() const;

  [[nodiscard]] const std::optional<Kernel>& kernel() const noexcept { return kernel_; }
  /// sum_{i != j} k(x_i, x_j) under the attached kernel.
  [[nodiscard]] double kernel_self_sum() const;
  /// row_sums()[j] = sum_i k(x_i, x_j), including i == j.
  [[nodiscard]] const std::vector<double>& kernel_row_sums() const;

  /// Copy of this set with `kernel` attached and its sums cached.
  [[nodiscard]] ReferenceSet with_kernel(const Kernel& kernel) const;

 private:
  std::vector<Summary> summaries_;
  std::vector<double> sorted_;
  double mean_ = 0.0;
  std::optional<Kernel> kernel_;
  double self_sum_ = 0.0;
  std::vector<double> row_sums_;
};

/// B_sum = sum_{i != j} k(y_i, y_j) over the window and
/// C_sum = sum_{i, j} k(x_i, y_j) against the reference.
struct KernelSums {
  double within = 0.0;
  double cross = 0.0;
};

/// Kernel contributions of individual items, when the caller already knows
/// them (e.g. bootstrap draws of reference points).
struct CrossHints {
  std::optional<double> removed;
  std::optional<double> added;
};

struct MmdUpdate {
  KernelSums sums;
  std::optional<StatisticValue> value;  // empty while the window holds < 2 items
};

/// Value of the unbiased MMD^2 estimate from cached sums.
double mmd2_u_from_sums(std::size_t n, double reference_self_sum, std::size_t m, const KernelSums& sums);

/// Sequential update of the cached kernel sums. `window` holds the current
/// items (including the one at `removed`, excluding `added`). O(n + w) kernel
/// evaluations, O(w) when both cross hints are supplied.
MmdUpdate mmd2_u_incremental(const KernelSums& sums, const Kernel& kernel, const ReferenceSet& reference,
                             std::span<const Summary> window, std::optional<std::size_t> removed,
                             const Summary* added, const CrossHints& hints = {});

/// Brute-force B_sum and C_sum for a window.
KernelSums kernel_sums(const Kernel& kernel, const ReferenceSet& reference, std::span<const Summary> window);

/// The w most recent deployment summaries. Optionally maintains a sorted
/// view (scalar windows), a running sum, and MMD kernel sums against a
/// reference. Cached floating-point sums are rebuilt from scratch every
/// `recompute_every` pushes.
class SlidingWindow {
 public:
  struct Options {
    bool sorted_view = true;
    std::size_t recompute_every = 10'000;
  };

  explicit SlidingWindow(std::size_t capacity);
  SlidingWindow(std::size_t capacity, Options options);
  SlidingWindow(std::size_t capacity, Kernel kernel, std::shared_ptr<const ReferenceSet> reference);
  SlidingWindow(std::size_t capacity, Kernel kernel, std::shared_ptr<const ReferenceSet> reference,
                Options options);

  /// Appends `s`, evicting and returning the oldest item when full.
  std::optional<Summary> push(Summary s);
  /// As push(), with the reference cross-sum of `s` supplied by the caller.
  std::optional<Summary> push_with_cross(Summary s, double cross_sum);

  [[nodiscard]] std::size_t size() const noexcept { return slots_.size(); }
  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] bool full() const noexcept { return slots_.size() == capacity_; }
  [[nodiscard]] bool empty() const noexcept { return slots_.empty(); }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

  /// Items in arrival order, oldest first.
  [[nodiscard]] std::vector<Summary> items() const;
  /// Ring storage in unspecified order.
  [[nodiscard]] std::span<const Summary> storage() const noexcept { return slots_; }
  /// Ascending multiset of scalar values; only maintained for scalar windows
  /// with Options::sorted_view set.
  [[nodiscard]] const std::multiset<double>& sorted_view() const noexcept { return sorted_; }
  [[nodiscard]] bool has_sorted_view() const noexcept { return sorted_enabled_; }
  [[nodiscard]] double scalar_sum() const noexcept { return sum_; }

  [[nodiscard]] bool has_kernel_context() const noexcept { return reference_ != nullptr; }
  [[nodiscard]] const KernelSums& kernel_sums() const noexcept { return sums_; }
  [[nodiscard]] const Kernel& kernel() const noexcept { return kernel_; }
  [[nodiscard]] const ReferenceSet* reference() const noexcept { return reference_.get(); }

  /// Rebuilds every cached sum from the current contents.
  void recompute();
  void clear();

 private:
  std::optional<Summary> push_impl(Summary s, std::optional<double> cross);

  std::size_t capacity_;
  Options options_;
  std::size_t dim_ = 0;
  std::vector<Summary> slots_;
  std::vector<double> slot_cross_;
  std::size_t head_ = 0;  // oldest slot once full
  bool sorted_enabled_ = false;
  std::multiset<double> sorted_;
  double sum_ = 0.0;
  Kernel kernel_;
  std::shared_ptr<const ReferenceSet> reference_;
  KernelSums sums_;
  std::size_t pushes_since_recompute_ = 0;
};

/// Two-sample Kolmogorov-Smirnov distance sup_u |F_n(u) - G_m(u)| between
/// right-continuous ECDFs, by a merge scan over the sorted samples.
StatisticValue ks_distance(const ReferenceSet& reference, const SlidingWindow& window);
/// Same, for plain sorted inputs. Returns the scaled integer form
/// max |m * #ref<=u - n * #win<=u| used for exact comparisons.
std::int64_t ks_scaled_sorted(std::span<const double> reference_sorted, std::span<const double> window_sorted);

/// (1/n) sum s_i - (1/m) sum s~_j over scalar summaries.
StatisticValue mean_difference(const ReferenceSet& reference, const SlidingWindow& window);

/// Unbiased MMD^2 U-statistic; may be negative.
StatisticValue mmd2_u(const ReferenceSet& reference, const SlidingWindow& window, const Kernel& kernel);
StatisticValue mmd2_u(std::span<const Summary> reference, std::span<const Summary> window, const Kernel& kernel);

/// Median pairwise Euclidean distance of the reference summaries.
double median_heuristic(const ReferenceSet& reference);

}  // namespace seqdrift

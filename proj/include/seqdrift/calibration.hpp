#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqdrift/statistics.hpp"
#include "seqdrift/trackers.hpp"

namespace seqdrift {

/// Per-step false detection hazard alpha (so E[run length] = 1/alpha) and an
/// optional horizon lambda for reporting P(T <= lambda).
struct CalibrationTarget {
  double alpha = 0.01;
  std::optional<std::uint64_t> lambda;

  void validate() const;
};

enum class ScheduleKind { fixed, time_varying };

/// Detection thresholds indexed by time step. No test happens before the
/// window fills (t < w); a time-varying schedule repeats its last value past
/// T_max.
class ThresholdSchedule {
 public:
  static ThresholdSchedule fixed(double h, std::size_t window, std::optional<double> alpha = std::nullopt);
  /// `values[k]` is the threshold for t = window + k.
  static ThresholdSchedule time_varying(std::vector<double> values, std::size_t window, double alpha);

  [[nodiscard]] ScheduleKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t window() const noexcept { return window_; }
  [[nodiscard]] std::uint64_t t_max() const noexcept { return window_ + values_.size() - 1; }
  [[nodiscard]] std::optional<double> alpha() const noexcept { return alpha_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] double fixed_h() const noexcept { return values_.front(); }

  /// Threshold used at time t, or nothing during warm-up.
  [[nodiscard]] std::optional<double> at(std::uint64_t t) const noexcept;

  /// JSON document {kind, w, T_max, alpha, values[]}; keys sorted, so the
  /// output is byte-stable. `metadata` (a JSON object text) is embedded
  /// verbatim under "metadata" when given.
  [[nodiscard]] std::string to_json(const std::string& metadata = {}) const;
  static ThresholdSchedule from_json(const std::string& text);

  /// Same schedule with every threshold replaced by f(threshold).
  template <typename Fn>
  [[nodiscard]] ThresholdSchedule transformed(Fn&& f) const {
    ThresholdSchedule copy = *this;
    for (double& v : copy.values_) v = f(v);
    return copy;
  }

 private:
  ThresholdSchedule(ScheduleKind kind, std::vector<double> values, std::size_t window, std::optional<double> alpha);

  ScheduleKind kind_;
  std::vector<double> values_;
  std::size_t window_;
  std::optional<double> alpha_;
};

std::optional<double> threshold_at(const ThresholdSchedule& schedule, std::uint64_t t);

/// Rank of the conservative upper quantile: ceil((1 - alpha) * m), at least 1.
std::size_t upper_quantile_rank(double alpha, std::size_t m);

/// Classical large-sample two-sample KS critical value
/// h = sqrt(ln(2/alpha)/2) * sqrt((n + w) / (n w)).
ThresholdSchedule ks_asymptotic_threshold(std::uint64_t n, std::size_t w, double alpha);

/// Offline threshold: the ceil((1-alpha) n_perm)-th order statistic of the
/// statistic over random splits of the reference into a pseudo-window of w
/// items and a pseudo-reference of the remaining n - w.
ThresholdSchedule permutation_threshold(const ReferenceSet& reference, std::size_t w, double alpha,
                                        std::size_t n_perm, const StatisticSpec& statistic, std::uint64_t seed,
                                        unsigned workers = 1);

struct CalibrationOptions {
  /// Quantiles are never taken over fewer surviving streams than this.
  std::size_t min_survivors = 100;
  unsigned workers = 1;
};

struct CalibrationResult {
  ThresholdSchedule schedule;
  /// survivors[k] streams were still undetected when step w + k was tested.
  std::vector<std::size_t> survivors;
};

/// Minimum number of simulated streams for the survivor floor to hold up to
/// T_max: ceil(min_survivors / (1 - alpha)^(T_max - w + 1)).
std::size_t required_streams(std::size_t min_survivors, double alpha, std::size_t w, std::uint64_t t_max);

/// Quantile/elimination pass over precomputed statistics. `statistics` is
/// stream-major: statistics[b * steps + k] is stream b at time w + k.
/// Streams whose statistic strictly exceeds the step's threshold drop out.
CalibrationResult thresholds_from_statistics(std::span<const double> statistics, std::size_t streams,
                                             std::size_t steps, std::size_t w, double alpha,
                                             std::size_t min_survivors);

/// Simulation-calibrated time-varying schedule targeting a Geom(alpha) run
/// length. B pseudo-null streams are bootstrap draws from the reference,
/// which itself stays the comparison sample.
CalibrationResult calibrate_schedule(std::shared_ptr<const ReferenceSet> reference, std::size_t w,
                                     const CalibrationTarget& target, std::uint64_t t_max, std::size_t streams,
                                     const StatisticSpec& statistic, std::uint64_t seed,
                                     const CalibrationOptions& options = {});

}  // namespace seqdrift

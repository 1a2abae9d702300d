#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqdrift/detector.hpp"
#include "seqdrift/streams.hpp"

namespace seqdrift {

/// Run lengths are counted in tests performed: a detection at time T has
/// run length T - w + 1, so the first possible detection has length 1.
struct RunRecord {
  std::uint64_t run_id = 0;
  std::uint64_t detection_time = 0;  // stream time T, or the cap when censored
  std::uint64_t run_length = 0;      // detection_time - w + 1
  bool censored = false;
};

struct RunLengthReport {
  std::size_t n_runs = 0;
  std::size_t window = 0;
  std::optional<double> alpha;
  double mean_T = 0.0;  // censored runs enter at the cap
  double standard_error = 0.0;
  double median_T = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  std::optional<std::uint64_t> lambda;
  std::optional<double> p_leq_lambda;
  std::size_t censored_count = 0;
  std::uint64_t cap = 0;  // stream-time cap
  double slackness = 0.0;
  /// Set when censoring biases mean_T downward.
  bool censoring_bias = false;
  std::vector<RunRecord> runs;
};

struct DelayReport {
  std::size_t n_runs = 0;
  std::uint64_t change_point = 0;
  double mean_delay = 0.0;  // mean of T - tau over runs detecting at T >= tau
  double median_delay = 0.0;
  std::size_t detected_after_change = 0;
  double false_alarm_fraction = 0.0;  // fraction with T < tau
  std::size_t censored_count = 0;
  std::uint64_t cap = 0;
  std::vector<RunRecord> runs;
};

struct EvaluationOptions {
  std::size_t n_runs = 250;
  /// Stream-time cap; defaults to w - 1 + ceil(100 / alpha).
  std::optional<std::uint64_t> cap;
  std::optional<std::uint64_t> lambda;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  /// When set, every run draws its own reference of this size from the
  /// pre-change distribution instead of using config.reference.
  std::optional<std::size_t> fresh_reference_size;
  DetectorOptions detector;
};

/// Default censoring cap for a schedule: w - 1 + ceil(100 / alpha).
std::uint64_t default_cap(std::size_t w, double alpha);

/// Monte Carlo estimate of the run length to false detection on fresh null
/// streams. Deterministic in (seed, configuration) for any worker count.
RunLengthReport estimate_arl0(const DetectorConfig& config, const ChangePointModel& null_model,
                              const EvaluationOptions& options);

DelayReport estimate_delay(const DetectorConfig& config, const ChangePointModel& model,
                           const EvaluationOptions& options);

/// alpha * E[T]: the measured run length relative to the 1/alpha bound.
double slackness(const RunLengthReport& report, double alpha);

/// Per-test conditional detection rate h_k = #{L = k} / #{L >= k} for
/// k = 1..steps, over uncensored detections; NaN where nobody is at risk.
std::vector<double> empirical_hazard(std::span<const RunRecord> runs, std::size_t steps);

struct GoodnessOfFit {
  double statistic = 0.0;
  std::size_t degrees_of_freedom = 0;
  double p_value = 1.0;
};

/// Pearson chi-square test of run lengths against Geom(alpha) on {1, 2, ...}
/// using `bins` near-equiprobable cells.
GoodnessOfFit geometric_goodness_of_fit(std::span<const RunRecord> runs, double alpha, std::size_t bins = 20);

/// sup_{k <= horizon} |S_hat(k) - (1 - alpha)^k| for the run-length survival function.
double survival_deviation(std::span<const RunRecord> runs, double alpha, std::uint64_t horizon);
/// Dvoretzky-Kiefer-Wolfowitz band half-width at confidence 1 - level.
double dkw_band(std::size_t n, double level);

// ---------------------------------------------------------------------------
// Fixed-threshold slackness sweep (KS distance, N(0,1) summaries, fresh
// reference per run, asymptotic critical value).

struct SweepPoint {
  std::size_t w = 0;
  std::size_t n = 0;
};

struct SweepRow {
  std::size_t w = 0;
  std::size_t n = 0;
  double alpha = 0.0;
  double mean_T = 0.0;
  double se = 0.0;
  double slackness = 0.0;
  std::size_t censored = 0;
  std::size_t runs = 0;
};

struct SweepOptions {
  double alpha = 0.001;
  std::size_t n_runs = 250;
  /// Run-length cap as a multiple of 1/alpha.
  double cap_multiple = 100.0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Window sweep at n = 3000 followed by reference-size sweep at w = 300.
std::vector<SweepPoint> appendix_grid();

SweepRow slackness_point(const SweepPoint& point, const SweepOptions& options);
std::vector<SweepRow> slackness_sweep(std::span<const SweepPoint> grid, const SweepOptions& options);

}  // namespace seqdrift

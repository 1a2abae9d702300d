#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "seqdrift/calibration.hpp"
#include "seqdrift/statistics.hpp"
#include "seqdrift/summaries.hpp"
#include "seqdrift/trackers.hpp"

namespace seqdrift {

/// Everything needed to run the four stages: window selection, summary
/// projection, statistic, and threshold decision.
struct DetectorConfig {
  SummaryStatistic summary = SummaryStatistic::identity(1);
  StatisticSpec statistic;
  std::size_t window = 100;
  ThresholdSchedule schedule = ThresholdSchedule::fixed(INFINITY, 100);
  std::shared_ptr<const ReferenceSet> reference;

  void validate() const;
};

struct DetectorOptions {
  /// Off: recompute the statistic from scratch at every step.
  bool incremental = true;
  bool trace = false;
  std::size_t recompute_every = 10'000;
};

struct TraceRow {
  std::uint64_t t = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool detected = false;
};

enum class Decision { none, detection };

/// Single-owner detector state. Time starts at 1 with the first instance;
/// tests start once the window is full (t >= w) and a detection is declared
/// when the statistic strictly exceeds the threshold. The detector halts on
/// detection.
class Detector {
 public:
  explicit Detector(DetectorConfig config, DetectorOptions options = {});

  /// Processes one raw instance (features plus, for model_loss summaries, a label).
  Decision step(std::span<const double> features, std::optional<std::span<const double>> label = std::nullopt);
  /// Processes a row laid out as features followed by labels.
  Decision step_row(std::span<const double> row);
  /// Processes an already-projected summary.
  Decision step_summary(Summary summary);

  [[nodiscard]] std::uint64_t time() const noexcept { return t_; }
  [[nodiscard]] std::optional<std::uint64_t> detected_at() const noexcept { return detected_at_; }
  [[nodiscard]] std::optional<StatisticValue> last_statistic() const noexcept { return last_; }
  [[nodiscard]] const std::vector<TraceRow>& trace() const noexcept { return trace_; }
  [[nodiscard]] const DetectorConfig& config() const noexcept { return config_; }
  [[nodiscard]] const WindowStatistic& statistic() const noexcept { return statistic_; }

 private:
  DetectorConfig config_;
  DetectorOptions options_;
  WindowStatistic statistic_;
  std::uint64_t t_ = 0;
  std::optional<StatisticValue> last_;
  std::optional<std::uint64_t> detected_at_;
  std::vector<TraceRow> trace_;
};

struct DetectionResult {
  /// Detection time T, or the last processed step when censored.
  std::uint64_t time = 0;
  bool censored = true;
  std::vector<TraceRow> trace;

  [[nodiscard]] std::optional<std::uint64_t> detection_time() const {
    return censored ? std::nullopt : std::optional<std::uint64_t>(time);
  }
};

/// Source of raw instance rows indexed by time step t >= 1.
using InstanceSource = std::function<Summary(std::uint64_t t)>;

/// Runs until detection or `cap` steps.
DetectionResult run(const DetectorConfig& config, const InstanceSource& source, std::uint64_t cap,
                    const DetectorOptions& options = {});
/// Runs over a finite stream of rows, stopping at min(cap, rows.size()).
DetectionResult run(const DetectorConfig& config, std::span<const Summary> rows, std::uint64_t cap,
                    const DetectorOptions& options = {});

}  // namespace seqdrift

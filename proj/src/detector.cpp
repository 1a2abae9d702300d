#include "seqdrift/detector.hpp"

#include <fmt/format.h>

#include "seqdrift/errors.hpp"

namespace seqdrift {

void DetectorConfig::validate() const {
  if (!reference) throw InvalidArgument("detector needs a reference set");
  if (window == 0) throw InvalidArgument("window size must be positive");
  if (schedule.window() != window) {
    throw InvalidArgument(fmt::format("schedule was built for w={} but the detector uses w={}", schedule.window(),
                                      window));
  }
  if (summary.out_dim() != reference->dim()) {
    throw DimensionMismatch(fmt::format("summary produces {}-dim output but the reference is {}-dim",
                                        summary.out_dim(), reference->dim()));
  }
  validate_statistic(statistic, *reference, window);
}

namespace {

WindowStatistic make_statistic(const DetectorConfig& config, const DetectorOptions& options) {
  config.validate();
  return WindowStatistic(config.statistic, config.reference, config.window,
                         WindowStatistic::Options{options.incremental, options.recompute_every});
}

}  // namespace

Detector::Detector(DetectorConfig config, DetectorOptions options)
    : config_(std::move(config)), options_(options), statistic_(make_statistic(config_, options_)) {}

Decision Detector::step(std::span<const double> features, std::optional<std::span<const double>> label) {
  if (detected_at_) throw StateError("detector already fired; create a new detector to continue monitoring");
  return step_summary(config_.summary.apply(features, label));
}

Decision Detector::step_row(std::span<const double> row) {
  if (detected_at_) throw StateError("detector already fired; create a new detector to continue monitoring");
  return step_summary(config_.summary.apply_row(row));
}

Decision Detector::step_summary(Summary summary) {
  if (detected_at_) throw StateError("detector already fired; create a new detector to continue monitoring");
  statistic_.push(std::move(summary));
  ++t_;
  const auto threshold = config_.schedule.at(t_);
  if (!threshold || !statistic_.ready()) return Decision::none;
  const double value = statistic_.value();
  last_ = StatisticValue{config_.statistic.kind, value};
  const bool fired = value > *threshold;
  if (options_.trace) trace_.push_back(TraceRow{t_, value, *threshold, fired});
  if (!fired) return Decision::none;
  detected_at_ = t_;
  return Decision::detection;
}

DetectionResult run(const DetectorConfig& config, const InstanceSource& source, std::uint64_t cap,
                    const DetectorOptions& options) {
  if (cap < config.window) throw InvalidArgument(fmt::format("cap ({}) must be at least w ({})", cap, config.window));
  Detector detector(config, options);
  DetectionResult result;
  for (std::uint64_t t = 1; t <= cap; ++t) {
    const Summary row = source(t);
    if (detector.step_row(row.values()) == Decision::detection) {
      result.censored = false;
      break;
    }
  }
  result.time = detector.time();
  if (options.trace) result.trace = detector.trace();
  return result;
}

DetectionResult run(const DetectorConfig& config, std::span<const Summary> rows, std::uint64_t cap,
                    const DetectorOptions& options) {
  if (rows.size() < config.window) {
    throw InvalidArgument(fmt::format("stream has {} instances, fewer than the window size {}", rows.size(),
                                      config.window));
  }
  const std::uint64_t limit = std::min<std::uint64_t>(cap, rows.size());
  if (limit < config.window) throw InvalidArgument(fmt::format("cap ({}) must be at least w ({})", cap, config.window));
  return run(config, [&](std::uint64_t t) -> Summary { return rows[t - 1]; }, limit, options);
}

}  // namespace seqdrift

#include "seqdrift/calibration.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>

#include "seqdrift/errors.hpp"
#include "seqdrift/parallel.hpp"
#include "seqdrift/random.hpp"

namespace seqdrift {

namespace {

constexpr std::uint64_t kPermutationDomain = 0x7065726d75746521ULL;
constexpr std::uint64_t kBootstrapDomain = 0x626f6f7473747261ULL;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument(fmt::format("alpha must lie in (0, 1), got {}", alpha));
}

}  // namespace

void CalibrationTarget::validate() const {
  check_alpha(alpha);
  if (lambda && *lambda == 0) throw InvalidArgument("lambda must be a positive integer");
}

// ---------------------------------------------------------------------------
// ThresholdSchedule

ThresholdSchedule::ThresholdSchedule(ScheduleKind kind, std::vector<double> values, std::size_t window,
                                     std::optional<double> alpha)
    : kind_(kind), values_(std::move(values)), window_(window), alpha_(alpha) {
  if (window_ == 0) throw InvalidArgument("schedule window must be positive");
  if (values_.empty()) throw InvalidArgument("schedule needs at least one threshold");
  for (double v : values_) {
    // +inf is allowed for fixed schedules ("never detect").
    if (std::isnan(v) || (kind_ == ScheduleKind::time_varying && !std::isfinite(v))) {
      throw InvalidArgument("schedule thresholds must be finite");
    }
  }
  if (alpha_) check_alpha(*alpha_);
}

ThresholdSchedule ThresholdSchedule::fixed(double h, std::size_t window, std::optional<double> alpha) {
  return ThresholdSchedule(ScheduleKind::fixed, {h}, window, alpha);
}

ThresholdSchedule ThresholdSchedule::time_varying(std::vector<double> values, std::size_t window, double alpha) {
  return ThresholdSchedule(ScheduleKind::time_varying, std::move(values), window, alpha);
}

std::optional<double> ThresholdSchedule::at(std::uint64_t t) const noexcept {
  if (t < window_) return std::nullopt;
  if (kind_ == ScheduleKind::fixed) return values_.front();
  const std::uint64_t k = std::min<std::uint64_t>(t - window_, values_.size() - 1);
  return values_[k];
}

std::optional<double> threshold_at(const ThresholdSchedule& schedule, std::uint64_t t) { return schedule.at(t); }

std::string ThresholdSchedule::to_json(const std::string& metadata) const {
  nlohmann::json doc;
  doc["kind"] = kind_ == ScheduleKind::fixed ? "fixed" : "time_varying";
  doc["w"] = window_;
  doc["T_max"] = t_max();
  doc["alpha"] = alpha_ ? nlohmann::json(*alpha_) : nlohmann::json(nullptr);
  if (kind_ == ScheduleKind::fixed && std::isinf(values_.front())) {
    doc["values"] = nlohmann::json::array({"inf"});
  } else {
    doc["values"] = values_;
  }
  if (!metadata.empty()) doc["metadata"] = nlohmann::json::parse(metadata);
  return doc.dump(2) + "\n";
}

ThresholdSchedule ThresholdSchedule::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("schedule is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidArgument("schedule JSON must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "kind" && key != "w" && key != "T_max" && key != "alpha" && key != "values" && key != "metadata") {
      throw InvalidArgument("unknown schedule key '" + key + "'");
    }
  }
  try {
    const std::string kind = doc.at("kind").get<std::string>();
    const auto w = doc.at("w").get<std::size_t>();
    std::optional<double> alpha;
    if (doc.contains("alpha") && !doc["alpha"].is_null()) alpha = doc["alpha"].get<double>();
    std::vector<double> values;
    for (const auto& v : doc.at("values")) {
      values.push_back(v.is_string() && v.get<std::string>() == "inf" ? INFINITY : v.get<double>());
    }
    if (kind == "fixed") {
      if (values.size() != 1) throw InvalidArgument("fixed schedule must hold exactly one value");
      return fixed(values.front(), w, alpha);
    }
    if (kind == "time_varying") {
      if (!alpha) throw InvalidArgument("time_varying schedule requires alpha");
      auto schedule = time_varying(std::move(values), w, *alpha);
      if (doc.contains("T_max") && doc["T_max"].get<std::uint64_t>() != schedule.t_max()) {
        throw InvalidArgument("schedule T_max does not match the number of values");
      }
      return schedule;
    }
    throw InvalidArgument("unknown schedule kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed schedule: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::size_t upper_quantile_rank(double alpha, std::size_t m) {
  const double exact = (1.0 - alpha) * static_cast<double>(m);
  // Guard against (1 - alpha) * m landing a hair above an integer.
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(rank, 1, m);
}

ThresholdSchedule ks_asymptotic_threshold(std::uint64_t n, std::size_t w, double alpha) {
  check_alpha(alpha);
  if (n == 0 || w == 0) throw InvalidArgument("n and w must be positive");
  const double c = std::sqrt(std::log(2.0 / alpha) / 2.0);
  const double nd = static_cast<double>(n);
  const double wd = static_cast<double>(w);
  return ThresholdSchedule::fixed(c * std::sqrt((nd + wd) / (nd * wd)), w, alpha);
}

namespace {

double split_statistic(const ReferenceSet& reference, std::span<const std::size_t> order, std::size_t w,
                       const StatisticSpec& statistic) {
  const auto& xs = reference.summaries();
  const std::size_t n = xs.size();
  switch (statistic.kind) {
    case StatisticKind::ks: {
      // order[0..w) are indices into the sorted reference for the pseudo-window.
      std::vector<char> in_window(n, 0);
      for (std::size_t k = 0; k < w; ++k) in_window[order[k]] = 1;
      const auto& sorted = reference.sorted_values();
      std::vector<double> win;
      std::vector<double> rest;
      win.reserve(w);
      rest.reserve(n - w);
      for (std::size_t i = 0; i < n; ++i) (in_window[i] ? win : rest).push_back(sorted[i]);
      const auto scaled = ks_scaled_sorted(rest, win);
      return static_cast<double>(scaled) / (static_cast<double>(rest.size()) * static_cast<double>(w));
    }
    case StatisticKind::mean_diff: {
      double win_sum = 0.0;
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        total += xs[order[k]].scalar();
        if (k < w) win_sum += xs[order[k]].scalar();
      }
      return (total - win_sum) / static_cast<double>(n - w) - win_sum / static_cast<double>(w);
    }
    case StatisticKind::mmd2_u: {
      std::vector<Summary> win;
      std::vector<Summary> rest;
      for (std::size_t k = 0; k < n; ++k) (k < w ? win : rest).push_back(xs[order[k]]);
      return mmd2_u(rest, win, *statistic.kernel).value;
    }
  }
  return 0.0;
}

}  // namespace

ThresholdSchedule permutation_threshold(const ReferenceSet& reference, std::size_t w, double alpha,
                                        std::size_t n_perm, const StatisticSpec& statistic, std::uint64_t seed,
                                        unsigned workers) {
  check_alpha(alpha);
  const std::size_t n = reference.size();
  if (w == 0 || w >= n) throw InvalidArgument(fmt::format("permutation threshold needs 0 < w < n (w={}, n={})", w, n));
  const auto needed = static_cast<std::size_t>(std::ceil(10.0 / alpha - 1e-9));
  if (n_perm < needed) {
    throw InvalidArgument(fmt::format("n_perm={} is too small to resolve alpha={}; need at least {}", n_perm, alpha,
                                      needed));
  }
  if (statistic.kind != StatisticKind::mmd2_u && !reference.is_scalar()) {
    throw DimensionMismatch("ks and mean_diff thresholds need scalar summaries");
  }
  if (statistic.kind == StatisticKind::mmd2_u && (!statistic.kernel || w < 2 || n - w < 2)) {
    throw InvalidArgument("mmd2_u permutation threshold needs a kernel and at least 2 items per side");
  }

  const StreamKey root{seed, kPermutationDomain};
  std::vector<double> stats(n_perm);
  parallel_for(n_perm, workers, [&](std::size_t p) {
    SplitMix64 engine = root.engine_at(p);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < w; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(order[k], order[pick(engine)]);
    }
    stats[p] = split_statistic(reference, order, w, statistic);
  });
  const std::size_t rank = upper_quantile_rank(alpha, n_perm);
  std::nth_element(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(rank - 1), stats.end());
  return ThresholdSchedule::fixed(stats[rank - 1], w, alpha);
}

std::size_t required_streams(std::size_t min_survivors, double alpha, std::size_t w, std::uint64_t t_max) {
  check_alpha(alpha);
  const double steps = static_cast<double>(t_max - w + 1);
  return static_cast<std::size_t>(std::ceil(static_cast<double>(min_survivors) / std::pow(1.0 - alpha, steps) - 1e-9));
}

CalibrationResult thresholds_from_statistics(std::span<const double> statistics, std::size_t streams,
                                             std::size_t steps, std::size_t w, double alpha,
                                             std::size_t min_survivors) {
  check_alpha(alpha);
  if (streams == 0 || steps == 0) throw InvalidArgument("need at least one stream and one step");
  if (statistics.size() != streams * steps) throw InvalidArgument("statistics matrix has the wrong size");

  std::vector<std::size_t> alive(streams);
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  std::vector<double> thresholds;
  std::vector<std::size_t> survivors;
  thresholds.reserve(steps);
  survivors.reserve(steps);
  std::vector<double> current;
  for (std::size_t k = 0; k < steps; ++k) {
    if (alive.size() < std::max<std::size_t>(min_survivors, 1)) {
      throw CalibrationError(fmt::format(
          "only {} simulated streams survive at t={}, below the floor of {}; use at least "
          "B >= min_survivors / (1 - alpha)^(T_max - w + 1) streams",
          alive.size(), w + k, min_survivors));
    }
    current.clear();
    for (std::size_t b : alive) current.push_back(statistics[b * steps + k]);
    const std::size_t rank = upper_quantile_rank(alpha, current.size());
    std::nth_element(current.begin(), current.begin() + static_cast<std::ptrdiff_t>(rank - 1), current.end());
    const double h = current[rank - 1];
    thresholds.push_back(h);
    survivors.push_back(alive.size());
    std::erase_if(alive, [&](std::size_t b) { return statistics[b * steps + k] > h; });
  }
  return CalibrationResult{ThresholdSchedule::time_varying(std::move(thresholds), w, alpha), std::move(survivors)};
}

CalibrationResult calibrate_schedule(std::shared_ptr<const ReferenceSet> reference, std::size_t w,
                                     const CalibrationTarget& target, std::uint64_t t_max, std::size_t streams,
                                     const StatisticSpec& statistic, std::uint64_t seed,
                                     const CalibrationOptions& options) {
  target.validate();
  if (!reference) throw InvalidArgument("calibration needs a reference set");
  validate_statistic(statistic, *reference, w);
  if (t_max < w) throw InvalidArgument(fmt::format("T_max ({}) must be at least w ({})", t_max, w));
  const std::size_t needed = required_streams(options.min_survivors, target.alpha, w, t_max);
  if (streams < needed) {
    throw CalibrationError(fmt::format(
        "B={} streams cannot keep {} survivors up to T_max={} at alpha={}: need "
        "B >= {} / (1 - {})^({} - {} + 1) = {}",
        streams, options.min_survivors, t_max, target.alpha, options.min_survivors, target.alpha, t_max, w, needed));
  }

  const std::size_t steps = t_max - w + 1;
  const std::size_t n = reference->size();
  std::vector<double> stats(streams * steps);
  const StreamKey root{seed, kBootstrapDomain};

  // Streams are independent given the reference; chunks amortise tracker setup.
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (streams + kChunk - 1) / kChunk;
  parallel_for(chunks, options.workers, [&](std::size_t c) {
    WindowStatistic tracker(statistic, reference, w);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t b = c * kChunk; b < std::min(streams, (c + 1) * kChunk); ++b) {
      tracker.reset();
      const StreamKey key = root.child(b);
      for (std::uint64_t t = 1; t <= t_max; ++t) {
        SplitMix64 engine = key.engine_at(t);
        tracker.push_reference_item(pick(engine));
        if (t >= w) stats[b * steps + (t - w)] = tracker.value();
      }
    }
  });
  return thresholds_from_statistics(stats, streams, steps, w, target.alpha, options.min_survivors);
}

}  // namespace seqdrift

#include "seqdrift/evaluation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>

#include "seqdrift/errors.hpp"
#include "seqdrift/parallel.hpp"

namespace seqdrift {

namespace {

constexpr std::uint64_t kDeploymentDomain = 0x6465706c6f796d74ULL;
constexpr std::uint64_t kReferenceDomain = 0x7265666572656e63ULL;

double nearest_rank(const std::vector<double>& sorted, double p) {
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

std::uint64_t resolve_cap(const DetectorConfig& config, const EvaluationOptions& options) {
  if (options.cap) {
    if (*options.cap < config.window) {
      throw InvalidArgument(fmt::format("cap ({}) must be at least w ({})", *options.cap, config.window));
    }
    return *options.cap;
  }
  const auto alpha = config.schedule.alpha();
  if (!alpha) throw InvalidArgument("schedule carries no alpha; an explicit cap is required");
  return default_cap(config.window, *alpha);
}

std::shared_ptr<const ReferenceSet> draw_reference(const DistributionSpec& p, std::size_t size,
                                                   const StreamKey& key, const DetectorConfig& config) {
  const auto& statistic = config.statistic;
  const auto rows = generate_stream(ChangePointModel::stationary(p), size, key);
  std::vector<Summary> summaries;
  summaries.reserve(rows.size());
  for (const auto& row : rows) summaries.push_back(config.summary.apply_row(row.values()));
  std::optional<Kernel> kernel;
  if (statistic.kind == StatisticKind::mmd2_u) kernel = statistic.kernel;
  return std::make_shared<const ReferenceSet>(std::move(summaries), kernel);
}

/// Runs every replicate; records land in run-index order.
std::vector<RunRecord> simulate_runs(const DetectorConfig& config, const ChangePointModel& model,
                                     const EvaluationOptions& options, std::uint64_t cap) {
  if (options.n_runs == 0) throw InvalidArgument("n_runs must be positive");
  if (model.dim() != config.summary.in_dim() + config.summary.label_dim()) {
    throw DimensionMismatch("stream model dimension does not match the summary input");
  }
  config.validate();
  std::vector<RunRecord> records(options.n_runs);
  const StreamKey deploy_root{options.seed, kDeploymentDomain};
  const StreamKey reference_root{options.seed, kReferenceDomain};
  parallel_for(options.n_runs, options.workers, [&](std::size_t run_id) {
    DetectorConfig local = config;
    if (options.fresh_reference_size) {
      local.reference =
          draw_reference(model.pre(), *options.fresh_reference_size, reference_root.child(run_id), config);
    }
    const StreamKey key = deploy_root.child(run_id);
    DetectorOptions detector_options = options.detector;
    detector_options.trace = false;
    const auto result = run(
        local, [&](std::uint64_t t) { return sample_at(model, t, key); }, cap, detector_options);
    records[run_id] = RunRecord{run_id, result.time, result.time - config.window + 1, result.censored};
  });
  return records;
}

}  // namespace

std::uint64_t default_cap(std::size_t w, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  return w - 1 + static_cast<std::uint64_t>(std::ceil(100.0 / alpha - 1e-9));
}

RunLengthReport estimate_arl0(const DetectorConfig& config, const ChangePointModel& null_model,
                              const EvaluationOptions& options) {
  if (null_model.change_point()) throw InvalidArgument("estimate_arl0 needs a model without a change point");
  const std::uint64_t cap = resolve_cap(config, options);

  RunLengthReport report;
  report.runs = simulate_runs(config, null_model, options, cap);
  report.n_runs = options.n_runs;
  report.window = config.window;
  report.alpha = config.schedule.alpha();
  report.cap = cap;
  report.lambda = options.lambda;

  std::vector<double> lengths;
  lengths.reserve(report.runs.size());
  double total = 0.0;
  std::size_t within_lambda = 0;
  for (const auto& r : report.runs) {
    lengths.push_back(static_cast<double>(r.run_length));
    total += static_cast<double>(r.run_length);
    if (r.censored) ++report.censored_count;
    if (options.lambda && !r.censored && r.run_length <= *options.lambda) ++within_lambda;
  }
  const double n = static_cast<double>(lengths.size());
  report.mean_T = total / n;
  double ss = 0.0;
  for (double l : lengths) ss += (l - report.mean_T) * (l - report.mean_T);
  report.standard_error = lengths.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  std::sort(lengths.begin(), lengths.end());
  report.median_T = nearest_rank(lengths, 0.5);
  report.q10 = nearest_rank(lengths, 0.1);
  report.q90 = nearest_rank(lengths, 0.9);
  if (options.lambda) report.p_leq_lambda = static_cast<double>(within_lambda) / n;
  report.censoring_bias = report.censored_count > 0;
  report.slackness = report.alpha ? slackness(report, *report.alpha) : 0.0;
  return report;
}

DelayReport estimate_delay(const DetectorConfig& config, const ChangePointModel& model,
                           const EvaluationOptions& options) {
  const auto tau = model.change_point();
  if (!tau) throw InvalidArgument("estimate_delay needs a finite change point; use estimate_arl0 for null streams");
  if (*tau < config.window) {
    throw InvalidArgument(fmt::format("change point ({}) must be at least w ({})", *tau, config.window));
  }
  const std::uint64_t cap = resolve_cap(config, options);
  if (cap < *tau) throw InvalidArgument("cap must reach the change point");

  DelayReport report;
  report.runs = simulate_runs(config, model, options, cap);
  report.n_runs = options.n_runs;
  report.change_point = *tau;
  report.cap = cap;
  std::vector<double> delays;
  std::size_t false_alarms = 0;
  for (const auto& r : report.runs) {
    if (r.censored) {
      ++report.censored_count;
    } else if (r.detection_time < *tau) {
      ++false_alarms;
    } else {
      delays.push_back(static_cast<double>(r.detection_time - *tau));
    }
  }
  report.false_alarm_fraction = static_cast<double>(false_alarms) / static_cast<double>(report.n_runs);
  report.detected_after_change = delays.size();
  if (!delays.empty()) {
    double total = 0.0;
    for (double d : delays) total += d;
    report.mean_delay = total / static_cast<double>(delays.size());
    std::sort(delays.begin(), delays.end());
    report.median_delay = nearest_rank(delays, 0.5);
  } else {
    report.mean_delay = report.median_delay = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

double slackness(const RunLengthReport& report, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  return alpha * report.mean_T;
}

std::vector<double> empirical_hazard(std::span<const RunRecord> runs, std::size_t steps) {
  std::vector<std::size_t> events(steps + 2, 0);
  std::vector<std::size_t> at_risk(steps + 2, 0);
  for (const auto& r : runs) {
    const std::uint64_t last = std::min<std::uint64_t>(r.run_length, steps);
    for (std::uint64_t k = 1; k <= last; ++k) ++at_risk[k];
    if (!r.censored && r.run_length >= 1 && r.run_length <= steps) ++events[r.run_length];
  }
  std::vector<double> hazard(steps, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 1; k <= steps; ++k) {
    if (at_risk[k] > 0) hazard[k - 1] = static_cast<double>(events[k]) / static_cast<double>(at_risk[k]);
  }
  return hazard;
}

GoodnessOfFit geometric_goodness_of_fit(std::span<const RunRecord> runs, double alpha, std::size_t bins) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  if (bins < 2 || runs.empty()) throw InvalidArgument("goodness of fit needs >= 2 bins and some runs");
  // Cell j covers run lengths in (edges[j], edges[j+1]]; survival is (1-alpha)^k.
  const double log_q = std::log1p(-alpha);
  std::vector<std::uint64_t> edges{0};
  for (std::size_t j = 1; j < bins; ++j) {
    const double target = static_cast<double>(j) / static_cast<double>(bins);
    const auto k = static_cast<std::uint64_t>(std::ceil(std::log1p(-target) / log_q - 1e-12));
    if (k > edges.back()) edges.push_back(k);
  }
  const std::size_t cells = edges.size();
  if (cells < 2) throw InvalidArgument("alpha too large for the requested number of bins");
  std::vector<double> expected(cells);
  for (std::size_t j = 0; j < cells; ++j) {
    const double upper = std::exp(log_q * static_cast<double>(edges[j]));
    const double lower = j + 1 < cells ? std::exp(log_q * static_cast<double>(edges[j + 1])) : 0.0;
    expected[j] = (upper - lower) * static_cast<double>(runs.size());
  }
  std::vector<double> observed(cells, 0.0);
  for (const auto& r : runs) {
    const auto it = std::lower_bound(edges.begin() + 1, edges.end(), r.run_length);
    observed[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
  }
  GoodnessOfFit fit;
  for (std::size_t j = 0; j < cells; ++j) {
    const double d = observed[j] - expected[j];
    fit.statistic += d * d / expected[j];
  }
  fit.degrees_of_freedom = cells - 1;
  const boost::math::chi_squared dist(static_cast<double>(fit.degrees_of_freedom));
  fit.p_value = boost::math::cdf(boost::math::complement(dist, fit.statistic));
  return fit;
}

double survival_deviation(std::span<const RunRecord> runs, double alpha, std::uint64_t horizon) {
  if (runs.empty()) throw InvalidArgument("no runs");
  std::vector<std::uint64_t> lengths;
  lengths.reserve(runs.size());
  for (const auto& r : runs) lengths.push_back(r.run_length);
  std::sort(lengths.begin(), lengths.end());
  const double n = static_cast<double>(lengths.size());
  double worst = 0.0;
  for (std::uint64_t k = 0; k <= horizon; ++k) {
    const auto above = lengths.end() - std::upper_bound(lengths.begin(), lengths.end(), k);
    const double empirical = static_cast<double>(above) / n;
    const double model = std::pow(1.0 - alpha, static_cast<double>(k));
    worst = std::max(worst, std::abs(empirical - model));
  }
  return worst;
}

double dkw_band(std::size_t n, double level) {
  return std::sqrt(std::log(2.0 / level) / (2.0 * static_cast<double>(n)));
}

// ---------------------------------------------------------------------------

std::vector<SweepPoint> appendix_grid() {
  std::vector<SweepPoint> grid;
  for (std::size_t w : {100, 200, 300, 400, 500}) grid.push_back({w, 3000});
  for (std::size_t n : {500, 1000, 3000, 10000, 30000}) grid.push_back({300, n});
  return grid;
}

SweepRow slackness_point(const SweepPoint& point, const SweepOptions& options) {
  DetectorConfig config;
  config.summary = SummaryStatistic::identity(1);
  config.statistic = StatisticSpec{StatisticKind::ks, std::nullopt};
  config.window = point.w;
  config.schedule = ks_asymptotic_threshold(point.n, point.w, options.alpha);
  // Placeholder; every run draws its own reference.
  config.reference = std::make_shared<const ReferenceSet>(std::vector<Summary>{Summary::scalar(0.0), Summary::scalar(1.0)});

  EvaluationOptions eval;
  eval.n_runs = options.n_runs;
  eval.cap = point.w - 1 + static_cast<std::uint64_t>(std::ceil(options.cap_multiple / options.alpha - 1e-9));
  eval.seed = derive_seed(options.seed, point.w, point.n);
  eval.workers = options.workers;
  eval.fresh_reference_size = point.n;
  const auto report = estimate_arl0(config, ChangePointModel::stationary(DistributionSpec::standard_normal()), eval);
  return SweepRow{point.w,          point.n,          options.alpha,        report.mean_T,
                  report.standard_error, report.slackness, report.censored_count, report.n_runs};
}

std::vector<SweepRow> slackness_sweep(std::span<const SweepPoint> grid, const SweepOptions& options) {
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const auto& point : grid) rows.push_back(slackness_point(point, options));
  return rows;
}

}  // namespace seqdrift

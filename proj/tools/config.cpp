#include "config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>
#include <sstream>

#include "seqdrift/errors.hpp"

namespace seqdrift::cli {

namespace {

constexpr std::uint64_t kReferenceStream = 0x5245464552454e43ULL;
constexpr std::uint64_t kCalibrationSeed = 0x43414c4942524154ULL;

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw InvalidArgument(fmt::format("unknown key '{}' in {} (allowed: {})", key, where, list));
    }
  }
}

template <typename T>
T get(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw InvalidArgument(fmt::format("{} is missing required key '{}'", where, key));
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(fmt::format("{}.{} has the wrong type", where, key));
  }
}

template <typename T>
std::optional<T> get_optional(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get<T>(j, key, where);
}

std::uint64_t positive(std::int64_t v, const std::string& what) {
  if (v < 1) throw InvalidArgument(fmt::format("{} must be a positive integer, got {}", what, v));
  return static_cast<std::uint64_t>(v);
}

std::vector<std::vector<double>> matrix_of(const nlohmann::json& j, const std::string& where) {
  try {
    return j.get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(where + " must be a list of rows of numbers");
  }
}

LinearModel parse_model(const nlohmann::json& j) {
  check_keys(j, {"weights", "bias", "softmax"}, "detector.summary.model");
  LinearModel model;
  model.weights = matrix_of(j.at("weights"), "detector.summary.model.weights");
  if (model.weights.empty() || model.weights.front().empty()) {
    throw InvalidArgument("detector.summary.model.weights must be non-empty");
  }
  model.bias = get_optional<std::vector<double>>(j, "bias", "detector.summary.model").value_or(std::vector<double>{});
  if (!model.bias.empty() && model.bias.size() != model.weights.size()) {
    throw InvalidArgument("detector.summary.model.bias must have one entry per weight row");
  }
  model.softmax = get_optional<bool>(j, "softmax", "detector.summary.model").value_or(false);
  return model;
}

std::size_t total_input_dim(const SummaryStatistic& s) { return s.in_dim() + s.label_dim(); }

}  // namespace

DistributionSpec parse_distribution(const nlohmann::json& j, const std::string& where) {
  const auto family = get<std::string>(j, "family", where);
  if (family == "gaussian" || family == "uniform") {
    check_keys(j, {"family", "mean", "variance"}, where);
    auto mean = get<std::vector<double>>(j, "mean", where);
    auto variance = get<std::vector<double>>(j, "variance", where);
    return family == "gaussian" ? DistributionSpec::gaussian(std::move(mean), std::move(variance))
                                : DistributionSpec::uniform(std::move(mean), std::move(variance));
  }
  if (family == "gaussian-mixture") {
    check_keys(j, {"family", "components"}, where);
    std::vector<MixtureComponent> components;
    for (const auto& c : j.at("components")) {
      check_keys(c, {"weight", "mean", "variance"}, where + ".components[]");
      components.push_back(MixtureComponent{get<double>(c, "weight", where), get<std::vector<double>>(c, "mean", where),
                                            get<std::vector<double>>(c, "variance", where)});
    }
    return DistributionSpec::mixture(std::move(components));
  }
  throw InvalidArgument(fmt::format("{}.family '{}' is not one of gaussian, gaussian-mixture, uniform", where, family));
}

SummaryStatistic build_summary(const nlohmann::json& j) {
  const std::string where = "detector.summary";
  const auto kind = get<std::string>(j, "kind", where);
  if (kind == "identity") {
    check_keys(j, {"kind", "dim"}, where);
    return SummaryStatistic::identity(positive(get_optional<std::int64_t>(j, "dim", where).value_or(1), where + ".dim"));
  }
  if (kind == "affine_projection") {
    check_keys(j, {"kind", "matrix"}, where);
    return SummaryStatistic::affine_projection(matrix_of(j.at("matrix"), where + ".matrix"));
  }
  if (kind == "model_output") {
    check_keys(j, {"kind", "model"}, where);
    const auto model = parse_model(j.at("model"));
    return SummaryStatistic::model_output(model, model.weights.front().size(), model.weights.size());
  }
  if (kind == "model_loss") {
    check_keys(j, {"kind", "model", "loss"}, where);
    const auto model = parse_model(j.at("model"));
    const auto loss_name = get<std::string>(j, "loss", where);
    Loss loss;
    if (loss_name == "squared_error") {
      loss = squared_error;
    } else if (loss_name == "cross_entropy") {
      loss = cross_entropy;
    } else {
      throw InvalidArgument("detector.summary.loss must be squared_error or cross_entropy");
    }
    return SummaryStatistic::model_loss(model, loss, model.weights.front().size(), model.weights.size());
  }
  throw InvalidArgument(fmt::format(
      "detector.summary.kind '{}' is not one of identity, model_output, model_loss, affine_projection", kind));
}

std::string ExperimentConfig::hash() const {
  const std::string text = document.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

ExperimentConfig parse_config(const nlohmann::json& document, const std::filesystem::path& base_dir) {
  check_keys(document, {"seed", "detector", "reference", "stream", "evaluation", "output"}, "config");
  ExperimentConfig c;
  c.document = document;
  c.seed = get_optional<std::uint64_t>(document, "seed", "config").value_or(0);

  // detector
  const auto& det = document.contains("detector") ? document.at("detector")
                                                  : throw InvalidArgument("config is missing 'detector'");
  check_keys(det, {"summary", "statistic", "kernel", "window", "threshold"}, "detector");
  c.summary = det.contains("summary") ? det.at("summary") : nlohmann::json{{"kind", "identity"}};
  (void)build_summary(c.summary);
  c.statistic = parse_statistic_kind(get_optional<std::string>(det, "statistic", "detector").value_or("ks"));
  c.window = positive(get<std::int64_t>(det, "window", "detector"), "detector.window");
  if (det.contains("kernel")) {
    const auto& k = det.at("kernel");
    check_keys(k, {"kind", "bandwidth", "value"}, "detector.kernel");
    KernelConfig kc;
    const auto kind = get<std::string>(k, "kind", "detector.kernel");
    if (kind == "rbf") {
      kc.kind = KernelKind::rbf;
      if (k.contains("bandwidth") && !(k.at("bandwidth").is_string() && k.at("bandwidth") == "median")) {
        kc.bandwidth = get<double>(k, "bandwidth", "detector.kernel");
        if (!(*kc.bandwidth > 0.0)) throw InvalidArgument("detector.kernel.bandwidth must be > 0 or \"median\"");
      }
    } else if (kind == "linear") {
      kc.kind = KernelKind::linear;
    } else if (kind == "constant") {
      kc.kind = KernelKind::constant;
      kc.constant = get_optional<double>(k, "value", "detector.kernel").value_or(1.0);
    } else {
      throw InvalidArgument("detector.kernel.kind must be rbf, linear or constant");
    }
    c.kernel = kc;
  }
  if (c.statistic == StatisticKind::mmd2_u && !c.kernel) {
    throw InvalidArgument("detector.statistic mmd2_u needs detector.kernel (e.g. {\"kind\": \"rbf\", \"bandwidth\": \"median\"})");
  }

  const auto& th = det.contains("threshold") ? det.at("threshold")
                                             : throw InvalidArgument("detector is missing 'threshold'");
  const auto policy = get<std::string>(th, "policy", "detector.threshold");
  auto& t = c.threshold;
  if (policy == "ks_asymptotic") {
    check_keys(th, {"policy", "alpha"}, "detector.threshold");
    t.policy = ThresholdPolicy::ks_asymptotic;
    t.alpha = get<double>(th, "alpha", "detector.threshold");
    if (c.statistic != StatisticKind::ks) throw InvalidArgument("ks_asymptotic thresholds only apply to the ks statistic");
  } else if (policy == "permutation") {
    check_keys(th, {"policy", "alpha", "n_perm"}, "detector.threshold");
    t.policy = ThresholdPolicy::permutation;
    t.alpha = get<double>(th, "alpha", "detector.threshold");
    t.n_perm = positive(get<std::int64_t>(th, "n_perm", "detector.threshold"), "detector.threshold.n_perm");
  } else if (policy == "calibrated") {
    check_keys(th, {"policy", "alpha", "T_max", "B", "min_survivors"}, "detector.threshold");
    t.policy = ThresholdPolicy::calibrated;
    t.alpha = get<double>(th, "alpha", "detector.threshold");
    t.t_max = positive(get<std::int64_t>(th, "T_max", "detector.threshold"), "detector.threshold.T_max");
    t.streams = positive(get<std::int64_t>(th, "B", "detector.threshold"), "detector.threshold.B");
    t.min_survivors =
        positive(get_optional<std::int64_t>(th, "min_survivors", "detector.threshold").value_or(100),
                 "detector.threshold.min_survivors");
    if (t.t_max < c.window) throw InvalidArgument("detector.threshold.T_max must be >= detector.window");
  } else if (policy == "fixed") {
    check_keys(th, {"policy", "h", "alpha"}, "detector.threshold");
    t.policy = ThresholdPolicy::fixed;
    t.h = get<double>(th, "h", "detector.threshold");
    t.alpha = get_optional<double>(th, "alpha", "detector.threshold").value_or(0.0);
  } else if (policy == "file") {
    check_keys(th, {"policy", "path"}, "detector.threshold");
    t.policy = ThresholdPolicy::file;
    t.path = base_dir / get<std::string>(th, "path", "detector.threshold");
  } else {
    throw InvalidArgument(fmt::format(
        "detector.threshold.policy '{}' is not one of ks_asymptotic, permutation, calibrated, fixed, file", policy));
  }
  if (t.policy != ThresholdPolicy::file && (t.policy != ThresholdPolicy::fixed || t.alpha != 0.0)) {
    if (!(t.alpha > 0.0 && t.alpha < 1.0)) throw InvalidArgument("detector.threshold.alpha must lie in (0, 1)");
  }

  // reference
  if (document.contains("reference")) {
    const auto& r = document.at("reference");
    check_keys(r, {"size", "distribution", "path"}, "reference");
    if (r.contains("path")) {
      if (r.contains("size") || r.contains("distribution")) {
        throw InvalidArgument("reference takes either 'path' or 'size' + 'distribution', not both");
      }
      c.reference_path = base_dir / get<std::string>(r, "path", "reference");
    } else {
      c.reference_size = positive(get<std::int64_t>(r, "size", "reference"), "reference.size");
      if (*c.reference_size < 2) throw InvalidArgument("reference.size must be at least 2");
      if (r.contains("distribution")) c.reference_distribution = parse_distribution(r.at("distribution"), "reference.distribution");
    }
  }

  // stream
  if (document.contains("stream")) {
    const auto& s = document.at("stream");
    check_keys(s, {"pre", "post", "change_point", "path"}, "stream");
    if (s.contains("path")) c.stream_path = base_dir / get<std::string>(s, "path", "stream");
    if (s.contains("pre")) c.pre = parse_distribution(s.at("pre"), "stream.pre");
    if (s.contains("post")) c.post = parse_distribution(s.at("post"), "stream.post");
    if (auto tau = get_optional<std::int64_t>(s, "change_point", "stream")) c.change_point = positive(*tau, "stream.change_point");
    if (c.change_point && !c.post) throw InvalidArgument("stream.change_point needs stream.post");
    if (c.pre && c.post && c.pre->dim() != c.post->dim()) throw InvalidArgument("stream.pre and stream.post dimensions differ");
  }
  if (c.reference_size && !c.reference_distribution) {
    if (!c.pre) throw InvalidArgument("reference.distribution is required when stream.pre is absent");
    c.reference_distribution = c.pre;
  }
  if (!c.reference_size && !c.reference_path) throw InvalidArgument("config needs a 'reference' section");

  // evaluation
  if (document.contains("evaluation")) {
    const auto& e = document.at("evaluation");
    check_keys(e, {"n_runs", "cap", "lambda", "fresh_reference"}, "evaluation");
    if (auto v = get_optional<std::int64_t>(e, "n_runs", "evaluation")) c.n_runs = positive(*v, "evaluation.n_runs");
    if (auto v = get_optional<std::int64_t>(e, "cap", "evaluation")) c.cap = positive(*v, "evaluation.cap");
    if (auto v = get_optional<std::int64_t>(e, "lambda", "evaluation")) c.lambda = positive(*v, "evaluation.lambda");
    c.fresh_reference = get_optional<bool>(e, "fresh_reference", "evaluation").value_or(false);
    if (c.cap && *c.cap < c.window) throw InvalidArgument("evaluation.cap must be >= detector.window");
  }
  if (c.fresh_reference) {
    if (!c.reference_size) throw InvalidArgument("evaluation.fresh_reference needs a synthetic reference (reference.size)");
    if (t.policy == ThresholdPolicy::permutation || t.policy == ThresholdPolicy::calibrated) {
      throw InvalidArgument("evaluation.fresh_reference needs a reference-independent threshold (ks_asymptotic, fixed, file)");
    }
  }

  if (document.contains("output")) {
    const auto& o = document.at("output");
    check_keys(o, {"dir", "prefix"}, "output");
    if (auto d = get_optional<std::string>(o, "dir", "output")) c.output_dir = base_dir / *d;
    c.output_prefix = get_optional<std::string>(o, "prefix", "output").value_or("");
  }

  const auto summary = build_summary(c.summary);
  for (const auto* dist : {c.pre ? &*c.pre : nullptr, c.reference_distribution ? &*c.reference_distribution : nullptr}) {
    if (dist && dist->dim() != total_input_dim(summary)) {
      throw InvalidArgument(fmt::format("distribution dimension {} does not match the summary input ({} columns)",
                                        dist->dim(), total_input_dim(summary)));
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(fmt::format("config {} is not valid JSON: {}", path.string(), e.what()));
  }
  if (seed_override && doc.is_object()) doc["seed"] = *seed_override;
  return parse_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::optional<Kernel> resolve_kernel(const ExperimentConfig& config, const ReferenceSet& reference) {
  if (!config.kernel) return std::nullopt;
  switch (config.kernel->kind) {
    case KernelKind::rbf:
      return Kernel::rbf(config.kernel->bandwidth ? *config.kernel->bandwidth : median_heuristic(reference));
    case KernelKind::linear:
      return Kernel::linear();
    case KernelKind::constant:
      return Kernel::constant_kernel(config.kernel->constant);
  }
  return std::nullopt;
}

std::shared_ptr<const ReferenceSet> build_reference(const ExperimentConfig& config) {
  const auto summary = build_summary(config.summary);
  std::vector<Summary> rows;
  if (config.reference_path) {
    rows = read_stream_file(*config.reference_path);
  } else {
    rows = generate_stream(ChangePointModel::stationary(*config.reference_distribution), *config.reference_size,
                           StreamKey{config.seed, kReferenceStream});
  }
  std::vector<Summary> summaries;
  summaries.reserve(rows.size());
  for (const auto& row : rows) summaries.push_back(summary.apply_row(row.values()));
  ReferenceSet plain(std::move(summaries));
  if (config.statistic != StatisticKind::mmd2_u) return std::make_shared<const ReferenceSet>(std::move(plain));
  return std::make_shared<const ReferenceSet>(plain.with_kernel(*resolve_kernel(config, plain)));
}

ThresholdSchedule build_schedule(const ExperimentConfig& config, const std::shared_ptr<const ReferenceSet>& reference,
                                 unsigned workers) {
  const auto& t = config.threshold;
  const StatisticSpec spec{config.statistic, reference->kernel()};
  switch (t.policy) {
    case ThresholdPolicy::ks_asymptotic:
      return ks_asymptotic_threshold(reference->size(), config.window, t.alpha);
    case ThresholdPolicy::permutation:
      return permutation_threshold(*reference, config.window, t.alpha, t.n_perm, spec,
                                   derive_seed(config.seed, kCalibrationSeed, 0), workers);
    case ThresholdPolicy::calibrated:
      return calibrate_schedule(reference, config.window, CalibrationTarget{t.alpha, config.lambda}, t.t_max, t.streams,
                                spec, derive_seed(config.seed, kCalibrationSeed, 1),
                                CalibrationOptions{t.min_survivors, workers})
          .schedule;
    case ThresholdPolicy::fixed:
      return ThresholdSchedule::fixed(t.h, config.window, t.alpha > 0.0 ? std::optional<double>(t.alpha) : std::nullopt);
    case ThresholdPolicy::file: {
      std::ifstream in(t.path);
      if (!in) throw InvalidArgument("cannot open schedule file " + t.path.string());
      std::stringstream ss;
      ss << in.rdbuf();
      auto schedule = ThresholdSchedule::from_json(ss.str());
      if (schedule.window() != config.window) {
        throw InvalidArgument(fmt::format("schedule file was built for w={}, config uses w={}", schedule.window(),
                                          config.window));
      }
      return schedule;
    }
  }
  throw InvalidArgument("unknown threshold policy");
}

DetectorConfig build_detector(const ExperimentConfig& config, unsigned workers) {
  DetectorConfig d;
  d.summary = build_summary(config.summary);
  d.reference = build_reference(config);
  d.statistic = StatisticSpec{config.statistic, d.reference->kernel()};
  d.window = config.window;
  d.schedule = build_schedule(config, d.reference, workers);
  d.validate();
  return d;
}

ChangePointModel stream_model(const ExperimentConfig& config) {
  if (!config.pre) throw InvalidArgument("config needs stream.pre for synthetic streams");
  return ChangePointModel(*config.pre, config.post ? *config.post : *config.pre, config.change_point);
}

}  // namespace seqdrift::cli

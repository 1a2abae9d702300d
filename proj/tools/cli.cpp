#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>

#include "config.hpp"
#include "seqdrift/errors.hpp"

namespace seqdrift::cli {

namespace {

constexpr std::uint64_t kRunStream = 0x73747265616d3031ULL;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string output_dir;
};

void add_common(CLI::App& cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd.add_option("--config", c.config_path, "Experiment config (JSON)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd.add_option("--seed", c.seed, "Master seed (overrides the config)");
  cmd.add_option("--workers", c.workers, "Worker threads; results do not depend on it")->check(CLI::Range(1u, 1024u));
  cmd.add_option("--output-dir", c.output_dir, "Directory for output files (overrides output.dir)");
}

std::filesystem::path output_path(const ExperimentConfig& config, const Common& common, const std::string& name) {
  const std::filesystem::path dir = common.output_dir.empty() ? config.output_dir : std::filesystem::path(common.output_dir);
  std::filesystem::create_directories(dir);
  return dir / (config.output_prefix + name);
}

nlohmann::json metadata(const ExperimentConfig& config) {
  return {{"config_hash", config.hash()}, {"seed", config.seed}, {"config", config.document}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write " + path.string());
  f << text;
}

std::string csv_header_comment(const std::string& hash, std::uint64_t seed) {
  return fmt::format("# config_hash={} seed={}\n", hash, seed);
}

std::string runs_csv(const std::string& hash, std::uint64_t seed, const std::vector<RunRecord>& runs) {
  std::string text = csv_header_comment(hash, seed) + "run_id,T,run_length,censored\n";
  for (const auto& r : runs) {
    text += fmt::format("{},{},{},{}\n", r.run_id, r.detection_time, r.run_length, r.censored ? 1 : 0);
  }
  return text;
}

nlohmann::json optional_json(const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

EvaluationOptions evaluation_options(const ExperimentConfig& config, const Common& common, std::optional<std::size_t> runs,
                                     std::optional<std::uint64_t> cap) {
  EvaluationOptions o;
  o.n_runs = runs.value_or(config.n_runs);
  o.cap = cap ? cap : config.cap;
  o.lambda = config.lambda;
  o.seed = config.seed;
  o.workers = common.workers;
  if (config.fresh_reference) o.fresh_reference_size = config.reference_size;
  return o;
}

int cmd_calibrate(const Common& common, const std::string& out_override, std::ostream& out) {
  const auto config = load_config(common.config_path, common.seed);
  const auto reference = build_reference(config);
  const auto schedule = build_schedule(config, reference, common.workers);
  const auto path = out_override.empty() ? output_path(config, common, "schedule.json") : std::filesystem::path(out_override);
  write_text(path, schedule.to_json(metadata(config).dump()));
  out << fmt::format("schedule ({} values, w={}, T_max={}) written to {}\n", schedule.values().size(), schedule.window(),
                     schedule.t_max(), path.string());
  return 0;
}

int cmd_run(const Common& common, const std::string& stream_override, const std::string& trace_path,
            std::optional<std::uint64_t> cap_override, std::ostream& out) {
  const auto config = load_config(common.config_path, common.seed);
  const auto detector = build_detector(config, common.workers);
  DetectorOptions options;
  options.trace = !trace_path.empty();

  DetectionResult result;
  std::optional<std::string> stream_source;
  if (!stream_override.empty() || config.stream_path) {
    const std::filesystem::path p = stream_override.empty() ? *config.stream_path : std::filesystem::path(stream_override);
    const auto rows = read_stream_file(p);
    const std::uint64_t cap = cap_override.value_or(rows.size());
    result = run(detector, rows, cap, options);
    stream_source = p.string();
  } else {
    const auto model = stream_model(config);
    std::uint64_t cap = 0;
    if (cap_override) {
      cap = *cap_override;
    } else if (config.cap) {
      cap = *config.cap;
    } else if (auto alpha = detector.schedule.alpha()) {
      cap = default_cap(config.window, *alpha);
    } else {
      throw InvalidArgument("the threshold carries no alpha; pass --cap or set evaluation.cap");
    }
    const StreamKey key{config.seed, kRunStream};
    result = run(detector, [&](std::uint64_t t) { return sample_at(model, t, key); }, cap, options);
  }

  nlohmann::json report;
  report["metadata"] = metadata(config);
  report["window"] = config.window;
  report["censored"] = result.censored;
  report["detection_time"] = optional_json(result.detection_time());
  report["run_length"] = result.censored ? nlohmann::json(nullptr) : nlohmann::json(result.time - config.window + 1);
  report["steps"] = result.time;
  report["stream"] = stream_source ? nlohmann::json(*stream_source) : nlohmann::json("synthetic");
  const auto path = output_path(config, common, "detection.json");
  write_text(path, report.dump(2) + "\n");

  if (options.trace) {
    std::string text = csv_header_comment(config.hash(), config.seed) + "t,statistic,threshold,detected\n";
    for (const auto& row : result.trace) {
      text += fmt::format("{},{},{},{}\n", row.t, row.statistic, row.threshold, row.detected ? 1 : 0);
    }
    write_text(trace_path, text);
  }
  if (result.censored) {
    out << fmt::format("no detection within {} steps; report written to {}\n", result.time, path.string());
  } else {
    out << fmt::format("detection at t={}; report written to {}\n", result.time, path.string());
  }
  return 0;
}

int cmd_arl(const Common& common, std::optional<std::size_t> runs, std::optional<std::uint64_t> cap, std::ostream& out) {
  const auto config = load_config(common.config_path, common.seed);
  if (!config.pre) throw InvalidArgument("arl needs stream.pre (the null distribution)");
  const auto detector = build_detector(config, common.workers);
  const auto report = estimate_arl0(detector, ChangePointModel::stationary(*config.pre),
                                    evaluation_options(config, common, runs, cap));
  nlohmann::json j;
  j["metadata"] = metadata(config);
  j["n_runs"] = report.n_runs;
  j["window"] = report.window;
  j["alpha"] = optional_json(report.alpha);
  j["mean_T"] = report.mean_T;
  j["standard_error"] = report.standard_error;
  j["median_T"] = report.median_T;
  j["q10"] = report.q10;
  j["q90"] = report.q90;
  j["lambda"] = optional_json(report.lambda);
  j["p_leq_lambda"] = optional_json(report.p_leq_lambda);
  j["censored_count"] = report.censored_count;
  j["censoring_bias"] = report.censoring_bias;
  j["cap"] = report.cap;
  j["slackness"] = report.slackness;
  const auto json_path = output_path(config, common, "arl_report.json");
  const auto csv_path = output_path(config, common, "arl_runs.csv");
  write_text(json_path, j.dump(2) + "\n");
  write_text(csv_path, runs_csv(config.hash(), config.seed, report.runs));
  out << fmt::format("mean run length {:.6g} (se {:.3g}, {} censored of {}); slackness {:.4g}\n", report.mean_T,
                     report.standard_error, report.censored_count, report.n_runs, report.slackness);
  out << fmt::format("wrote {} and {}\n", json_path.string(), csv_path.string());
  return 0;
}

int cmd_delay(const Common& common, std::optional<std::size_t> runs, std::optional<std::uint64_t> cap,
              std::ostream& out) {
  const auto config = load_config(common.config_path, common.seed);
  if (!config.change_point) throw InvalidArgument("delay needs stream.change_point and stream.post");
  const auto detector = build_detector(config, common.workers);
  const auto report = estimate_delay(detector, stream_model(config), evaluation_options(config, common, runs, cap));
  nlohmann::json j;
  j["metadata"] = metadata(config);
  j["n_runs"] = report.n_runs;
  j["change_point"] = report.change_point;
  j["mean_delay"] = report.mean_delay;
  j["median_delay"] = report.median_delay;
  j["detected_after_change"] = report.detected_after_change;
  j["false_alarm_fraction"] = report.false_alarm_fraction;
  j["censored_count"] = report.censored_count;
  j["cap"] = report.cap;
  const auto json_path = output_path(config, common, "delay_report.json");
  const auto csv_path = output_path(config, common, "delay_runs.csv");
  write_text(json_path, j.dump(2) + "\n");
  write_text(csv_path, runs_csv(config.hash(), config.seed, report.runs));
  out << fmt::format("mean delay {:.6g} over {} runs; false-alarm fraction {:.4g}\n", report.mean_delay,
                     report.detected_after_change, report.false_alarm_fraction);
  out << fmt::format("wrote {} and {}\n", json_path.string(), csv_path.string());
  return 0;
}

struct AppendixArgs {
  double scale = 1.0;
  std::optional<std::size_t> runs;
  double cap_multiple = 1000.0;
  std::string grid = "full";
  std::string out;
};

int cmd_appendix(const Common& common, const AppendixArgs& a, std::ostream& out) {
  if (!(a.scale > 0.0)) throw InvalidArgument("--scale must be positive");
  SweepOptions options;
  options.alpha = 0.001 / a.scale;
  if (!(options.alpha < 1.0)) throw InvalidArgument("--scale too small: alpha would reach 1");
  options.n_runs = a.runs.value_or(250);
  options.cap_multiple = a.cap_multiple;
  options.seed = common.seed.value_or(0);
  options.workers = common.workers;

  std::vector<SweepPoint> grid;
  if (a.grid == "full") {
    grid = appendix_grid();
  } else {
    grid = {{100, 3000}, {300, 3000}};
  }
  nlohmann::json params = {{"experiment", "appendix"}, {"alpha", options.alpha}, {"n_runs", options.n_runs},
                           {"cap_multiple", options.cap_multiple}, {"grid", a.grid}, {"seed", options.seed}};
  ExperimentConfig provenance;
  provenance.document = params;
  provenance.seed = options.seed;

  const auto rows = slackness_sweep(grid, options);
  std::string text = csv_header_comment(provenance.hash(), options.seed) + "w,n,alpha,mean_T,se,slackness,censored,runs\n";
  for (const auto& r : rows) {
    text += fmt::format("{},{},{},{},{},{},{},{}\n", r.w, r.n, r.alpha, r.mean_T, r.se, r.slackness, r.censored, r.runs);
  }
  std::filesystem::path path = a.out;
  if (path.empty()) {
    const std::filesystem::path dir = common.output_dir.empty() ? "." : common.output_dir;
    std::filesystem::create_directories(dir);
    path = dir / "appendix_sweep.csv";
  }
  write_text(path, text);
  for (const auto& r : rows) {
    out << fmt::format("w={:<4} n={:<6} slackness={:.4g} (mean run length {:.6g}, {} censored)\n", r.w, r.n,
                       r.slackness, r.mean_T, r.censored);
  }
  out << fmt::format("wrote {}\n", path.string());
  return 0;
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequential drift detection: calibrate thresholds, monitor streams, estimate run lengths", "seqdrift"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Common common;
  std::string schedule_out, stream_path, trace_path;
  std::optional<std::uint64_t> cap;
  std::optional<std::size_t> runs;
  AppendixArgs appendix;

  auto* calibrate = app.add_subcommand("calibrate", "Build a threshold schedule and save it as JSON");
  add_common(*calibrate, common);
  calibrate->add_option("--out", schedule_out, "Schedule path (default <output-dir>/schedule.json)");

  auto* run_cmd = app.add_subcommand("run", "Monitor one stream (file or synthetic) until detection");
  add_common(*run_cmd, common);
  run_cmd->add_option("--stream", stream_path, "CSV stream file (overrides stream.path)")->check(CLI::ExistingFile);
  run_cmd->add_option("--trace", trace_path, "Write a per-step CSV trace (t,statistic,threshold,detected)");
  run_cmd->add_option("--cap", cap, "Maximum number of stream steps");

  auto* arl = app.add_subcommand("arl", "Estimate the average run length under no change");
  add_common(*arl, common);
  arl->add_option("--runs", runs, "Number of runs (overrides evaluation.n_runs)")->check(CLI::PositiveNumber);
  arl->add_option("--cap", cap, "Stream-time cap per run");

  auto* delay = app.add_subcommand("delay", "Estimate the detection delay after a change point");
  add_common(*delay, common);
  delay->add_option("--runs", runs, "Number of runs (overrides evaluation.n_runs)")->check(CLI::PositiveNumber);
  delay->add_option("--cap", cap, "Stream-time cap per run");

  auto* repro = app.add_subcommand("reproduce-appendix", "Slackness sweep over window and reference sizes");
  add_common(*repro, common, false);
  repro->add_option("--scale", appendix.scale, "Use alpha = 0.001 / scale (0.1 gives the alpha = 0.01 desk run)");
  repro->add_option("--runs", appendix.runs, "Runs per grid point (default 250)")->check(CLI::PositiveNumber);
  repro->add_option("--cap-multiple", appendix.cap_multiple, "Run-length cap in units of 1/alpha")
      ->check(CLI::PositiveNumber);
  repro->add_option("--grid", appendix.grid, "full: both sweeps; desk: w in {100,300} at n=3000")
      ->check(CLI::IsMember({"full", "desk"}));
  repro->add_option("--out", appendix.out, "CSV path (default <output-dir>/appendix_sweep.csv)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*calibrate) return cmd_calibrate(common, schedule_out, out);
    if (*run_cmd) return cmd_run(common, stream_path, trace_path, cap, out);
    if (*arl) return cmd_arl(common, runs, cap, out);
    if (*delay) return cmd_delay(common, runs, cap, out);
    if (*repro) return cmd_appendix(common, appendix, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace seqdrift::cli

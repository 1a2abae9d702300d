#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seqdrift/calibration.hpp"
#include "seqdrift/detector.hpp"
#include "seqdrift/evaluation.hpp"
#include "seqdrift/streams.hpp"

namespace seqdrift::cli {

struct KernelConfig {
  KernelKind kind = KernelKind::rbf;
  std::optional<double> bandwidth;  // empty: median heuristic
  double constant = 1.0;
};

enum class ThresholdPolicy { ks_asymptotic, permutation, calibrated, fixed, file };

struct ThresholdConfig {
  ThresholdPolicy policy = ThresholdPolicy::ks_asymptotic;
  double alpha = 0.01;
  std::size_t n_perm = 0;
  std::uint64_t t_max = 0;
  std::size_t streams = 0;
  std::size_t min_survivors = 100;
  double h = 0.0;
  std::filesystem::path path;
};

struct ExperimentConfig {
  /// Normalised document (after --seed overrides); hashed for provenance.
  nlohmann::json document;
  std::uint64_t seed = 0;

  // detector
  nlohmann::json summary;
  StatisticKind statistic = StatisticKind::ks;
  std::optional<KernelConfig> kernel;
  std::size_t window = 100;
  ThresholdConfig threshold;

  // reference
  std::optional<std::size_t> reference_size;
  std::optional<DistributionSpec> reference_distribution;
  std::optional<std::filesystem::path> reference_path;

  // stream
  std::optional<DistributionSpec> pre;
  std::optional<DistributionSpec> post;
  std::optional<std::uint64_t> change_point;
  std::optional<std::filesystem::path> stream_path;

  // evaluation
  std::size_t n_runs = 250;
  std::optional<std::uint64_t> cap;
  std::optional<std::uint64_t> lambda;
  bool fresh_reference = false;

  // output
  std::filesystem::path output_dir = ".";
  std::string output_prefix;

  /// 16 hex digits of FNV-1a over the canonical JSON dump.
  [[nodiscard]] std::string hash() const;
};

/// Parses and validates a config document. Unknown keys are errors.
/// `base_dir` resolves relative file paths.
ExperimentConfig parse_config(const nlohmann::json& document, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override);

DistributionSpec parse_distribution(const nlohmann::json& j, const std::string& where);
SummaryStatistic build_summary(const nlohmann::json& j);

/// Reference set from the config (file or synthetic), with the kernel attached
/// for mmd2_u.
std::shared_ptr<const ReferenceSet> build_reference(const ExperimentConfig& config);
/// Kernel resolved against the reference (median heuristic when no bandwidth).
std::optional<Kernel> resolve_kernel(const ExperimentConfig& config, const ReferenceSet& reference);
ThresholdSchedule build_schedule(const ExperimentConfig& config, const std::shared_ptr<const ReferenceSet>& reference,
                                 unsigned workers);
DetectorConfig build_detector(const ExperimentConfig& config, unsigned workers);

ChangePointModel stream_model(const ExperimentConfig& config);

}  // namespace seqdrift::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "seqdrift/random.hpp"
#include "seqdrift/summaries.hpp"

namespace seqdrift {

enum class Family { gaussian, gaussian_mixture, uniform };

struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> variance;  // diagonal covariance, entries > 0
};

/// Parametric distribution over R^dim. Uniform is parametrised by its mean
/// and per-coordinate variance: U(mean - sqrt(3 var), mean + sqrt(3 var)).
class DistributionSpec {
 public:
  static DistributionSpec gaussian(std::vector<double> mean, std::vector<double> variance);
  static DistributionSpec standard_normal(std::size_t dim = 1);
  static DistributionSpec uniform(std::vector<double> mean, std::vector<double> variance);
  static DistributionSpec mixture(std::vector<MixtureComponent> components);

  [[nodiscard]] Family family() const noexcept { return family_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const std::vector<MixtureComponent>& components() const noexcept { return components_; }

  /// Draws one point using the supplied engine.
  [[nodiscard]] Summary sample(SplitMix64& engine) const;

 private:
  DistributionSpec(Family family, std::vector<MixtureComponent> components);

  Family family_;
  std::size_t dim_ = 0;
  std::vector<MixtureComponent> components_;
};

/// Sudden change: draws come from `pre` for t < change_point and from `post`
/// afterwards. An empty change point means no change ever happens.
class ChangePointModel {
 public:
  ChangePointModel(DistributionSpec pre, DistributionSpec post, std::optional<std::uint64_t> change_point);
  static ChangePointModel stationary(DistributionSpec p);

  [[nodiscard]] const DistributionSpec& pre() const noexcept { return pre_; }
  [[nodiscard]] const DistributionSpec& post() const noexcept { return post_; }
  [[nodiscard]] std::optional<std::uint64_t> change_point() const noexcept { return change_point_; }
  [[nodiscard]] std::size_t dim() const noexcept { return pre_.dim(); }
  [[nodiscard]] const DistributionSpec& distribution_at(std::uint64_t t) const noexcept {
    return (change_point_ && t >= *change_point_) ? post_ : pre_;
  }

 private:
  DistributionSpec pre_;
  DistributionSpec post_;
  std::optional<std::uint64_t> change_point_;
};

/// Draw for time step t >= 1. The result depends only on (key, t).
Summary sample_at(const ChangePointModel& model, std::uint64_t t, const StreamKey& key);

/// Elements for t = 1..length.
std::vector<Summary> generate_stream(const ChangePointModel& model, std::size_t length, const StreamKey& key);

/// Elements for t = first..last inclusive.
std::vector<Summary> generate_range(const ChangePointModel& model, std::uint64_t first, std::uint64_t last,
                                    const StreamKey& key);

/// Stream files: one summary per line, comma separated reals. An optional
/// leading `# dim=<d>` header is checked against the data; blank lines are
/// skipped.
std::vector<Summary> read_stream(std::istream& in);
std::vector<Summary> read_stream_file(const std::filesystem::path& path);
void write_stream(std::ostream& out, std::span<const Summary> stream);
void write_stream_file(const std::filesystem::path& path, std::span<const Summary> stream);

}  // namespace seqdrift

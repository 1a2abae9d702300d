#include "seqdrift/streams.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "seqdrift/errors.hpp"

namespace seqdrift {

namespace {

void validate_component(const MixtureComponent& c, std::size_t dim) {
  if (c.mean.size() != dim || c.variance.size() != dim) {
    throw InvalidArgument("distribution component dimensions are inconsistent");
  }
  for (double v : c.variance) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("variance entries must be finite and > 0");
  }
  for (double m : c.mean) {
    if (!std::isfinite(m)) throw InvalidArgument("mean entries must be finite");
  }
}

}  // namespace

DistributionSpec::DistributionSpec(Family family, std::vector<MixtureComponent> components)
    : family_(family), components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("distribution needs at least one component");
  dim_ = components_.front().mean.size();
  if (dim_ == 0) throw InvalidArgument("distribution dimension must be positive");
  double total = 0.0;
  for (const auto& c : components_) {
    validate_component(c, dim_);
    if (!(c.weight >= 0.0)) throw InvalidArgument("mixture weights must be non-negative");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("mixture weights must sum to 1");
}

DistributionSpec DistributionSpec::gaussian(std::vector<double> mean, std::vector<double> variance) {
  return DistributionSpec(Family::gaussian, {MixtureComponent{1.0, std::move(mean), std::move(variance)}});
}

DistributionSpec DistributionSpec::standard_normal(std::size_t dim) {
  return gaussian(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

DistributionSpec DistributionSpec::uniform(std::vector<double> mean, std::vector<double> variance) {
  return DistributionSpec(Family::uniform, {MixtureComponent{1.0, std::move(mean), std::move(variance)}});
}

DistributionSpec DistributionSpec::mixture(std::vector<MixtureComponent> components) {
  return DistributionSpec(Family::gaussian_mixture, std::move(components));
}

Summary DistributionSpec::sample(SplitMix64& engine) const {
  const MixtureComponent* component = &components_.front();
  if (components_.size() > 1) {
    std::uniform_real_distribution<double> pick(0.0, 1.0);
    double u = pick(engine);
    for (const auto& c : components_) {
      component = &c;
      if (u < c.weight) break;
      u -= c.weight;
    }
  }
  std::vector<double> out(dim_);
  if (family_ == Family::uniform) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t i = 0; i < dim_; ++i) {
      out[i] = component->mean[i] + std::sqrt(3.0 * component->variance[i]) * unit(engine);
    }
  } else {
    for (std::size_t i = 0; i < dim_; ++i) {
      std::normal_distribution<double> normal(component->mean[i], std::sqrt(component->variance[i]));
      out[i] = normal(engine);
    }
  }
  return Summary(std::move(out));
}

ChangePointModel::ChangePointModel(DistributionSpec pre, DistributionSpec post,
                                   std::optional<std::uint64_t> change_point)
    : pre_(std::move(pre)), post_(std::move(post)), change_point_(change_point) {
  if (pre_.dim() != post_.dim()) throw InvalidArgument("pre- and post-change dimensions differ");
  if (change_point_ && *change_point_ < 1) throw InvalidArgument("change point must be >= 1");
}

ChangePointModel ChangePointModel::stationary(DistributionSpec p) {
  DistributionSpec copy = p;
  return ChangePointModel(std::move(p), std::move(copy), std::nullopt);
}

Summary sample_at(const ChangePointModel& model, std::uint64_t t, const StreamKey& key) {
  if (t < 1) throw InvalidArgument("time steps start at 1");
  SplitMix64 engine = key.engine_at(t);
  return model.distribution_at(t).sample(engine);
}

std::vector<Summary> generate_range(const ChangePointModel& model, std::uint64_t first, std::uint64_t last,
                                    const StreamKey& key) {
  if (first < 1 || last < first) throw InvalidArgument("invalid stream range");
  std::vector<Summary> out;
  out.reserve(last - first + 1);
  for (std::uint64_t t = first; t <= last; ++t) out.push_back(sample_at(model, t, key));
  return out;
}

std::vector<Summary> generate_stream(const ChangePointModel& model, std::size_t length, const StreamKey& key) {
  if (length == 0) throw InvalidArgument("stream length must be positive");
  return generate_range(model, 1, length, key);
}

std::vector<Summary> read_stream(std::istream& in) {
  std::vector<Summary> out;
  std::optional<std::size_t> dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '#') {
      const auto pos = line.find("dim=");
      if (pos != std::string::npos && out.empty() && !dim) {
        dim = std::stoul(line.substr(pos + 4));
        if (*dim == 0) throw InvalidArgument("stream header declares dim=0");
      }
      continue;
    }
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InvalidArgument(fmt::format("stream line {}: cannot parse '{}'", line_no, cell));
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos) {
        throw InvalidArgument(fmt::format("stream line {}: cannot parse '{}'", line_no, cell));
      }
      values.push_back(v);
    }
    if (dim && values.size() != *dim) {
      throw DimensionMismatch(fmt::format("stream line {}: expected {} values, got {}", line_no, *dim,
                                          values.size()));
    }
    dim = values.size();
    try {
      out.emplace_back(std::move(values));
    } catch (const InvalidArgument&) {
      throw InvalidArgument(fmt::format("stream line {}: non-finite value", line_no));
    }
  }
  return out;
}

std::vector<Summary> read_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open stream file " + path.string());
  return read_stream(in);
}

void write_stream(std::ostream& out, std::span<const Summary> stream) {
  if (!stream.empty()) out << "# dim=" << stream.front().dim() << '\n';
  for (const auto& s : stream) {
    for (std::size_t i = 0; i < s.dim(); ++i) out << (i ? "," : "") << fmt::format("{}", s[i]);
    out << '\n';
  }
}

void write_stream_file(const std::filesystem::path& path, std::span<const Summary> stream) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write stream file " + path.string());
  write_stream(out, stream);
}

}  // namespace seqdrift

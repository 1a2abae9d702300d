#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace seqdrift {

/// A point in summary space: a finite real vector of fixed dimension.
class Summary {
 public:
  Summary() = default;
  /// Throws InvalidArgument if any entry is NaN or infinite.
  explicit Summary(std::vector<double> values);
  static Summary scalar(double value) { return Summary(std::vector<double>{value}); }

  [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }
  /// First coordinate; callers check dim() == 1 where it matters.
  [[nodiscard]] double scalar() const noexcept { return values_.front(); }

  friend bool operator==(const Summary&, const Summary&) = default;

 private:
  std::vector<double> values_;
};

/// Black-box model M: features -> outputs. Must be side-effect free if the
/// owning SummaryStatistic is shared between threads.
using Model = std::function<std::vector<double>(std::span<const double>)>;
/// Black-box loss l(y, M(x)).
using Loss = std::function<double(std::span<const double> label, std::span<const double> prediction)>;

enum class SummaryKind { identity, model_output, model_loss, affine_projection };

/// Projection s(x, y) of raw instances onto the space statistics run in.
class SummaryStatistic {
 public:
  static SummaryStatistic identity(std::size_t dim);
  static SummaryStatistic model_output(Model model, std::size_t in_dim, std::size_t out_dim);
  static SummaryStatistic model_loss(Model model, Loss loss, std::size_t in_dim, std::size_t label_dim);
  /// `matrix` is row-major with out_dim rows of in_dim entries.
  static SummaryStatistic affine_projection(std::vector<std::vector<double>> matrix);

  [[nodiscard]] SummaryKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t in_dim() const noexcept { return in_dim_; }
  [[nodiscard]] std::size_t out_dim() const noexcept { return out_dim_; }
  [[nodiscard]] std::size_t label_dim() const noexcept { return label_dim_; }
  [[nodiscard]] bool requires_label() const noexcept { return kind_ == SummaryKind::model_loss; }

  /// Applies s. A label must be supplied exactly when kind() is model_loss.
  [[nodiscard]] Summary apply(std::span<const double> x,
                              std::optional<std::span<const double>> y = std::nullopt) const;

  /// Convenience for rows that carry in_dim features followed by label_dim labels.
  [[nodiscard]] Summary apply_row(std::span<const double> row) const;

 private:
  SummaryStatistic() = default;

  SummaryKind kind_ = SummaryKind::identity;
  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
  std::size_t label_dim_ = 0;
  Model model_;
  Loss loss_;
  std::vector<double> matrix_;  // row-major out_dim x in_dim
};

Summary apply_summary(const SummaryStatistic& stat, std::span<const double> x,
                      std::optional<std::span<const double>> y = std::nullopt);

/// Linear (optionally softmax) stand-in for a trained model: W x + b.
struct LinearModel {
  std::vector<std::vector<double>> weights;  // out_dim rows of in_dim
  std::vector<double> bias;                  // empty means zero
  bool softmax = false;

  [[nodiscard]] std::vector<double> operator()(std::span<const double> x) const;
};

double squared_error(std::span<const double> label, std::span<const double> prediction);
/// -sum_k y_k log p_k, with p_k clamped away from zero.
double cross_entropy(std::span<const double> label, std::span<const double> prediction);

}  // namespace seqdrift

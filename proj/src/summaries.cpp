#include "seqdrift/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seqdrift/errors.hpp"

namespace seqdrift {

Summary::Summary(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("summary contains a non-finite value");
  }
}

SummaryStatistic SummaryStatistic::identity(std::size_t dim) {
  if (dim == 0) throw InvalidArgument("identity summary needs dim >= 1");
  SummaryStatistic s;
  s.kind_ = SummaryKind::identity;
  s.in_dim_ = s.out_dim_ = dim;
  return s;
}

SummaryStatistic SummaryStatistic::model_output(Model model, std::size_t in_dim, std::size_t out_dim) {
  if (!model) throw InvalidArgument("model_output summary requires a model");
  if (in_dim == 0 || out_dim == 0) throw InvalidArgument("model_output summary needs positive dims");
  SummaryStatistic s;
  s.kind_ = SummaryKind::model_output;
  s.in_dim_ = in_dim;
  s.out_dim_ = out_dim;
  s.model_ = std::move(model);
  return s;
}

SummaryStatistic SummaryStatistic::model_loss(Model model, Loss loss, std::size_t in_dim,
                                              std::size_t label_dim) {
  if (!model || !loss) throw InvalidArgument("model_loss summary requires both a model and a loss");
  if (in_dim == 0 || label_dim == 0) throw InvalidArgument("model_loss summary needs positive dims");
  SummaryStatistic s;
  s.kind_ = SummaryKind::model_loss;
  s.in_dim_ = in_dim;
  s.out_dim_ = 1;
  s.label_dim_ = label_dim;
  s.model_ = std::move(model);
  s.loss_ = std::move(loss);
  return s;
}

SummaryStatistic SummaryStatistic::affine_projection(std::vector<std::vector<double>> matrix) {
  if (matrix.empty() || matrix.front().empty()) {
    throw InvalidArgument("affine_projection needs a non-empty matrix");
  }
  SummaryStatistic s;
  s.kind_ = SummaryKind::affine_projection;
  s.out_dim_ = matrix.size();
  s.in_dim_ = matrix.front().size();
  s.matrix_.reserve(s.out_dim_ * s.in_dim_);
  for (const auto& row : matrix) {
    if (row.size() != s.in_dim_) throw InvalidArgument("affine_projection matrix rows differ in length");
    s.matrix_.insert(s.matrix_.end(), row.begin(), row.end());
  }
  return s;
}

Summary SummaryStatistic::apply(std::span<const double> x, std::optional<std::span<const double>> y) const {
  if (x.size() != in_dim_) {
    throw DimensionMismatch("summary expects " + std::to_string(in_dim_) + " features, got " +
                            std::to_string(x.size()));
  }
  if (requires_label() && !y) throw InvalidArgument("model_loss summary requires a label");
  if (!requires_label() && y) throw InvalidArgument("labels are only accepted by model_loss summaries");

  switch (kind_) {
    case SummaryKind::identity:
      return Summary(std::vector<double>(x.begin(), x.end()));
    case SummaryKind::model_output: {
      auto out = model_(x);
      if (out.size() != out_dim_) throw DimensionMismatch("model returned an output of unexpected size");
      return Summary(std::move(out));
    }
    case SummaryKind::model_loss: {
      if (y->size() != label_dim_) throw DimensionMismatch("label has unexpected size");
      const auto prediction = model_(x);
      return Summary::scalar(loss_(*y, prediction));
    }
    case SummaryKind::affine_projection: {
      std::vector<double> out(out_dim_, 0.0);
      for (std::size_t r = 0; r < out_dim_; ++r) {
        const double* row = matrix_.data() + r * in_dim_;
        double acc = 0.0;
        for (std::size_t c = 0; c < in_dim_; ++c) acc += row[c] * x[c];
        out[r] = acc;
      }
      return Summary(std::move(out));
    }
  }
  throw InvalidArgument("unknown summary kind");
}

Summary SummaryStatistic::apply_row(std::span<const double> row) const {
  if (row.size() != in_dim_ + label_dim_) {
    throw DimensionMismatch("row has " + std::to_string(row.size()) + " columns, expected " +
                            std::to_string(in_dim_ + label_dim_));
  }
  if (requires_label()) return apply(row.first(in_dim_), row.subspan(in_dim_));
  return apply(row);
}

Summary apply_summary(const SummaryStatistic& stat, std::span<const double> x,
                      std::optional<std::span<const double>> y) {
  return stat.apply(x, y);
}

std::vector<double> LinearModel::operator()(std::span<const double> x) const {
  std::vector<double> out(weights.size(), 0.0);
  for (std::size_t r = 0; r < weights.size(); ++r) {
    if (weights[r].size() != x.size()) throw DimensionMismatch("linear model input has wrong size");
    double acc = bias.empty() ? 0.0 : bias[r];
    for (std::size_t c = 0; c < x.size(); ++c) acc += weights[r][c] * x[c];
    out[r] = acc;
  }
  if (softmax && !out.empty()) {
    const double top = *std::max_element(out.begin(), out.end());
    double total = 0.0;
    for (double& v : out) {
      v = std::exp(v - top);
      total += v;
    }
    for (double& v : out) v /= total;
  }
  return out;
}

double squared_error(std::span<const double> label, std::span<const double> prediction) {
  if (label.size() != prediction.size()) throw DimensionMismatch("label and prediction differ in size");
  double acc = 0.0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    const double d = label[i] - prediction[i];
    acc += d * d;
  }
  return acc;
}

double cross_entropy(std::span<const double> label, std::span<const double> prediction) {
  if (label.size() != prediction.size()) throw DimensionMismatch("label and prediction differ in size");
  double acc = 0.0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    acc -= label[i] * std::log(std::max(prediction[i], 1e-300));
  }
  return acc;
}

}  // namespace seqdrift

#include "seqdrift/trackers.hpp"

#include <algorithm>
#include <limits>

#include "seqdrift/errors.hpp"

namespace seqdrift {

namespace {
constexpr std::int64_t kNegInf = std::numeric_limits<std::int64_t>::min() / 4;
}

KsTracker::PrefixMaxTree::PrefixMaxTree(const std::vector<std::int64_t>& values) {
  while (leaves_ < values.size()) leaves_ *= 2;
  nodes_.assign(2 * leaves_, Node{0, kNegInf});
  std::int64_t previous = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    nodes_[leaves_ + i] = Node{values[i] - previous, values[i] - previous};
    previous = values[i];
  }
  for (std::size_t node = leaves_ - 1; node >= 1; --node) combine(node);
}

void KsTracker::PrefixMaxTree::combine(std::size_t node) noexcept {
  const Node& left = nodes_[2 * node];
  const Node& right = nodes_[2 * node + 1];
  nodes_[node].sum = left.sum + right.sum;
  nodes_[node].best = std::max(left.best, left.sum + right.best);
}

void KsTracker::PrefixMaxTree::suffix_add(std::size_t first, std::int64_t delta) noexcept {
  std::size_t node = leaves_ + first;
  nodes_[node].sum += delta;
  nodes_[node].best += delta;
  while (node > 1) {
    node >>= 1;
    combine(node);
  }
}

KsTracker::KsTracker(std::shared_ptr<const ReferenceSet> reference, std::size_t window)
    : reference_(std::move(reference)),
      window_(window),
      distinct_(),
      cumulative_(),
      upper_({0}),
      lower_({0}) {
  if (!reference_ || !reference_->is_scalar()) throw DimensionMismatch("KS tracking needs a scalar reference");
  if (window_ == 0) throw InvalidArgument("window size must be positive");
  const auto& sorted = reference_->sorted_values();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (distinct_.empty() || sorted[i] != distinct_.back()) {
      distinct_.push_back(sorted[i]);
      cumulative_.push_back(0);
    }
    cumulative_.back() = static_cast<std::int64_t>(i + 1);
  }
  reset();
}

std::vector<std::int64_t> KsTracker::initial_upper() const {
  std::vector<std::int64_t> init(distinct_.size());
  const auto w = static_cast<std::int64_t>(window_);
  for (std::size_t j = 0; j < distinct_.size(); ++j) init[j] = w * cumulative_[j];
  return init;
}

std::vector<std::int64_t> KsTracker::initial_lower() const {
  std::vector<std::int64_t> init(distinct_.size() + 1, 0);
  const auto w = static_cast<std::int64_t>(window_);
  for (std::size_t i = 1; i <= distinct_.size(); ++i) init[i] = -w * cumulative_[i - 1];
  return init;
}

void KsTracker::reset() {
  upper_ = PrefixMaxTree(initial_upper());
  lower_ = PrefixMaxTree(initial_lower());
  count_ = 0;
}

void KsTracker::shift(double value, std::int64_t sign) {
  const auto n = static_cast<std::int64_t>(reference_->size());
  const auto lb = static_cast<std::size_t>(std::lower_bound(distinct_.begin(), distinct_.end(), value) -
                                           distinct_.begin());
  const auto ub = static_cast<std::size_t>(std::upper_bound(distinct_.begin(), distinct_.end(), value) -
                                           distinct_.begin());
  if (lb < distinct_.size()) upper_.suffix_add(lb, -sign * n);
  lower_.suffix_add(ub, sign * n);
}

void KsTracker::add(double value) {
  shift(value, +1);
  ++count_;
}

void KsTracker::remove(double value) {
  if (count_ == 0) throw StateError("removing from an empty KS tracker");
  shift(value, -1);
  --count_;
}

std::int64_t KsTracker::scaled() const noexcept { return std::max({upper_.max(), lower_.max(), std::int64_t{0}}); }

double KsTracker::value() const noexcept {
  return static_cast<double>(scaled()) /
         (static_cast<double>(reference_->size()) * static_cast<double>(window_));
}

// ---------------------------------------------------------------------------

void validate_statistic(const StatisticSpec& spec, const ReferenceSet& reference, std::size_t window) {
  if (window == 0) throw InvalidArgument("window size must be positive");
  switch (spec.kind) {
    case StatisticKind::ks:
    case StatisticKind::mean_diff:
      if (!reference.is_scalar()) {
        throw DimensionMismatch(std::string(to_string(spec.kind)) +
                                " requires 1-dimensional summaries; use mmd2_u for multivariate data");
      }
      break;
    case StatisticKind::mmd2_u:
      if (!spec.kernel) throw InvalidArgument("mmd2_u requires a kernel");
      if (window < 2) throw InvalidArgument("mmd2_u requires a window of at least 2");
      if (!reference.kernel() || !(*reference.kernel() == *spec.kernel)) {
        throw InvalidArgument("reference set must be built with the statistic's kernel (ReferenceSet::with_kernel)");
      }
      break;
  }
}

namespace {

SlidingWindow make_window(const StatisticSpec& spec, const std::shared_ptr<const ReferenceSet>& reference,
                          std::size_t window, const WindowStatistic::Options& options) {
  SlidingWindow::Options wopts;
  wopts.recompute_every = options.recompute_every;
  // The KS tracker replaces the sorted view on the incremental path.
  wopts.sorted_view = !options.incremental && spec.kind == StatisticKind::ks;
  if (spec.kind == StatisticKind::mmd2_u && options.incremental) {
    return SlidingWindow(window, *spec.kernel, reference, wopts);
  }
  return SlidingWindow(window, wopts);
}

std::shared_ptr<const ReferenceSet> checked_reference(const StatisticSpec& spec,
                                                      std::shared_ptr<const ReferenceSet> reference,
                                                      std::size_t window) {
  if (!reference) throw InvalidArgument("statistic needs a reference set");
  validate_statistic(spec, *reference, window);
  return reference;
}

}  // namespace

WindowStatistic::WindowStatistic(const StatisticSpec& spec, std::shared_ptr<const ReferenceSet> reference,
                                 std::size_t window)
    : WindowStatistic(spec, std::move(reference), window, Options{}) {}

WindowStatistic::WindowStatistic(const StatisticSpec& spec, std::shared_ptr<const ReferenceSet> reference,
                                 std::size_t window, Options options)
    : spec_(spec),
      options_(options),
      reference_(checked_reference(spec, std::move(reference), window)),
      window_(make_window(spec_, reference_, window, options_)) {
  if (spec_.kind == StatisticKind::ks && options_.incremental) ks_.emplace(reference_, window);
}

void WindowStatistic::after_push(const std::optional<Summary>& evicted, double added_scalar) {
  if (!ks_) return;
  ks_->add(added_scalar);
  if (evicted) ks_->remove(evicted->scalar());
}

void WindowStatistic::push(Summary s) {
  if (s.dim() != reference_->dim()) {
    throw DimensionMismatch("summary has dimension " + std::to_string(s.dim()) + ", reference has " +
                            std::to_string(reference_->dim()));
  }
  const double first = s.scalar();
  auto evicted = window_.push(std::move(s));
  after_push(evicted, first);
}

void WindowStatistic::push_reference_item(std::size_t index) {
  const Summary& s = reference_->summaries().at(index);
  std::optional<Summary> evicted;
  if (window_.has_kernel_context()) {
    evicted = window_.push_with_cross(s, reference_->kernel_row_sums()[index]);
  } else {
    evicted = window_.push(s);
  }
  after_push(evicted, s.scalar());
}

double WindowStatistic::value() const {
  if (!ready()) throw StateError("statistic requested before the window is full");
  switch (spec_.kind) {
    case StatisticKind::ks:
      return ks_ ? ks_->value() : ks_distance(*reference_, window_).value;
    case StatisticKind::mean_diff:
      if (options_.incremental) {
        return reference_->scalar_mean() - window_.scalar_sum() / static_cast<double>(window_.size());
      }
      return mean_difference(*reference_, window_).value;
    case StatisticKind::mmd2_u:
      if (options_.incremental) {
        return mmd2_u_from_sums(reference_->size(), reference_->kernel_self_sum(), window_.size(),
                                window_.kernel_sums());
      }
      return mmd2_u(*reference_, window_, *spec_.kernel).value;
  }
  return 0.0;
}

void WindowStatistic::reset() {
  window_.clear();
  if (ks_) ks_->reset();
}

}  // namespace seqdrift

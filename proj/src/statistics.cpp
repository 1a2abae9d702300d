#include "seqdrift/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

#include "seqdrift/errors.hpp"

namespace seqdrift {

Kernel Kernel::rbf(double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InvalidArgument("rbf bandwidth must be > 0");
  return Kernel{KernelKind::rbf, bandwidth, 1.0};
}

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const noexcept {
  switch (kind) {
    case KernelKind::rbf: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
      }
      return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
    }
    case KernelKind::linear: {
      double dot = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
      return dot;
    }
    case KernelKind::constant:
      return constant;
  }
  return 0.0;
}

std::string_view to_string(StatisticKind kind) noexcept {
  switch (kind) {
    case StatisticKind::ks:
      return "ks";
    case StatisticKind::mmd2_u:
      return "mmd2_u";
    case StatisticKind::mean_diff:
      return "mean_diff";
  }
  return "?";
}

StatisticKind parse_statistic_kind(std::string_view name) {
  if (name == "ks") return StatisticKind::ks;
  if (name == "mmd2_u" || name == "mmd") return StatisticKind::mmd2_u;
  if (name == "mean_diff") return StatisticKind::mean_diff;
  throw InvalidArgument("unknown statistic '" + std::string(name) + "' (expected ks, mmd2_u or mean_diff)");
}

// ---------------------------------------------------------------------------
// ReferenceSet

ReferenceSet::ReferenceSet(std::vector<Summary> summaries, std::optional<Kernel> kernel)
    : summaries_(std::move(summaries)), kernel_(kernel) {
  if (summaries_.size() < 2) throw InvalidArgument("reference set needs at least 2 summaries");
  const std::size_t d = summaries_.front().dim();
  if (d == 0) throw InvalidArgument("reference summaries must be non-empty");
  for (const auto& s : summaries_) {
    if (s.dim() != d) throw DimensionMismatch("reference summaries differ in dimension");
  }
  if (d == 1) {
    sorted_.reserve(summaries_.size());
    double total = 0.0;
    for (const auto& s : summaries_) {
      sorted_.push_back(s.scalar());
      total += s.scalar();
    }
    std::sort(sorted_.begin(), sorted_.end());
    mean_ = total / static_cast<double>(summaries_.size());
  }
  if (kernel_) {
    const std::size_t n = summaries_.size();
    row_sums_.assign(n, 0.0);
    double diagonal = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double kii = (*kernel_)(summaries_[i], summaries_[i]);
      diagonal += kii;
      row_sums_[i] += kii;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double kij = (*kernel_)(summaries_[i], summaries_[j]);
        row_sums_[i] += kij;
        row_sums_[j] += kij;
      }
    }
    self_sum_ = std::accumulate(row_sums_.begin(), row_sums_.end(), 0.0) - diagonal;
  }
}

double ReferenceSet::scalar_mean() const {
  if (!is_scalar()) throw DimensionMismatch("scalar mean requested for a multivariate reference");
  return mean_;
}

double ReferenceSet::kernel_self_sum() const {
  if (!kernel_) throw InvalidArgument("reference set has no kernel attached");
  return self_sum_;
}

const std::vector<double>& ReferenceSet::kernel_row_sums() const {
  if (!kernel_) throw InvalidArgument("reference set has no kernel attached");
  return row_sums_;
}

ReferenceSet ReferenceSet::with_kernel(const Kernel& kernel) const { return ReferenceSet(summaries_, kernel); }

// ---------------------------------------------------------------------------
// MMD sums

double mmd2_u_from_sums(std::size_t n, double reference_self_sum, std::size_t m, const KernelSums& sums) {
  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  return reference_self_sum / (nd * (nd - 1.0)) + sums.within / (md * (md - 1.0)) -
         2.0 * sums.cross / (nd * md);
}

namespace {

double cross_sum(const Kernel& kernel, const ReferenceSet& reference, const Summary& y) {
  double acc = 0.0;
  for (const auto& x : reference.summaries()) acc += kernel(x, y);
  return acc;
}

void require_matching_kernel(const ReferenceSet& reference, const Kernel& kernel) {
  if (!reference.kernel() || !(*reference.kernel() == kernel)) {
    throw InvalidArgument("reference set must carry the same kernel as the statistic");
  }
}

}  // namespace

KernelSums kernel_sums(const Kernel& kernel, const ReferenceSet& reference, std::span<const Summary> window) {
  KernelSums sums;
  for (std::size_t i = 0; i < window.size(); ++i) {
    for (std::size_t j = i + 1; j < window.size(); ++j) sums.within += 2.0 * kernel(window[i], window[j]);
    sums.cross += cross_sum(kernel, reference, window[i]);
  }
  return sums;
}

MmdUpdate mmd2_u_incremental(const KernelSums& sums, const Kernel& kernel, const ReferenceSet& reference,
                             std::span<const Summary> window, std::optional<std::size_t> removed,
                             const Summary* added, const CrossHints& hints) {
  if (removed && *removed >= window.size()) throw InvalidArgument("removed index outside the window");
  if (added && added->dim() != reference.dim()) {
    throw DimensionMismatch("added summary dimension differs from the reference");
  }
  KernelSums out = sums;
  if (removed) {
    const Summary& r = window[*removed];
    double acc = 0.0;
    for (std::size_t j = 0; j < window.size(); ++j) {
      if (j != *removed) acc += kernel(r, window[j]);
    }
    out.within -= 2.0 * acc;
    out.cross -= hints.removed ? *hints.removed : cross_sum(kernel, reference, r);
  }
  if (added) {
    double acc = 0.0;
    for (std::size_t j = 0; j < window.size(); ++j) {
      if (!removed || j != *removed) acc += kernel(*added, window[j]);
    }
    out.within += 2.0 * acc;
    out.cross += hints.added ? *hints.added : cross_sum(kernel, reference, *added);
  }
  const std::size_t m = window.size() - (removed ? 1 : 0) + (added ? 1 : 0);
  MmdUpdate result{out, std::nullopt};
  if (m >= 2) {
    require_matching_kernel(reference, kernel);
    result.value = StatisticValue{StatisticKind::mmd2_u,
                                  mmd2_u_from_sums(reference.size(), reference.kernel_self_sum(), m, out)};
  }
  return result;
}

// ---------------------------------------------------------------------------
// SlidingWindow

SlidingWindow::SlidingWindow(std::size_t capacity) : SlidingWindow(capacity, Options{}) {}

SlidingWindow::SlidingWindow(std::size_t capacity, Options options) : capacity_(capacity), options_(options) {
  if (capacity_ == 0) throw InvalidArgument("window capacity must be positive");
  if (options_.recompute_every == 0) throw InvalidArgument("recompute period must be positive");
  slots_.reserve(capacity_);
}

SlidingWindow::SlidingWindow(std::size_t capacity, Kernel kernel, std::shared_ptr<const ReferenceSet> reference)
    : SlidingWindow(capacity, kernel, std::move(reference), Options{}) {}

SlidingWindow::SlidingWindow(std::size_t capacity, Kernel kernel, std::shared_ptr<const ReferenceSet> reference,
                             Options options)
    : SlidingWindow(capacity, options) {
  if (!reference) throw InvalidArgument("kernel context needs a reference set");
  require_matching_kernel(*reference, kernel);
  kernel_ = kernel;
  reference_ = std::move(reference);
  dim_ = reference_->dim();
  slot_cross_.reserve(capacity_);
}

std::optional<Summary> SlidingWindow::push(Summary s) { return push_impl(std::move(s), std::nullopt); }

std::optional<Summary> SlidingWindow::push_with_cross(Summary s, double cross_sum) {
  return push_impl(std::move(s), cross_sum);
}

std::optional<Summary> SlidingWindow::push_impl(Summary s, std::optional<double> cross) {
  if (dim_ == 0) dim_ = s.dim();
  if (s.dim() != dim_) {
    throw DimensionMismatch("window holds " + std::to_string(dim_) + "-dim summaries, got " +
                            std::to_string(s.dim()));
  }
  if (slots_.empty()) sorted_enabled_ = options_.sorted_view && dim_ == 1;

  const bool evicting = full();
  if (reference_) {
    const double added_cross = cross ? *cross : cross_sum(kernel_, *reference_, s);
    CrossHints hints{std::nullopt, added_cross};
    if (evicting) hints.removed = slot_cross_[head_];
    const auto update = mmd2_u_incremental(sums_, kernel_, *reference_, slots_,
                                           evicting ? std::optional<std::size_t>(head_) : std::nullopt, &s, hints);
    sums_ = update.sums;
    if (evicting) {
      slot_cross_[head_] = added_cross;
    } else {
      slot_cross_.push_back(added_cross);
    }
  }

  std::optional<Summary> evicted;
  if (dim_ == 1) sum_ += s.scalar();
  if (sorted_enabled_) sorted_.insert(s.scalar());
  if (evicting) {
    evicted = std::move(slots_[head_]);
    slots_[head_] = std::move(s);
    head_ = (head_ + 1) % capacity_;
    if (dim_ == 1) sum_ -= evicted->scalar();
    if (sorted_enabled_) sorted_.erase(sorted_.find(evicted->scalar()));
  } else {
    slots_.push_back(std::move(s));
  }

  if (++pushes_since_recompute_ >= options_.recompute_every) recompute();
  return evicted;
}

std::vector<Summary> SlidingWindow::items() const {
  std::vector<Summary> out;
  out.reserve(slots_.size());
  for (std::size_t k = 0; k < slots_.size(); ++k) out.push_back(slots_[(head_ + k) % slots_.size()]);
  return out;
}

void SlidingWindow::recompute() {
  pushes_since_recompute_ = 0;
  if (dim_ == 1) {
    sum_ = 0.0;
    for (const auto& s : slots_) sum_ += s.scalar();
  }
  if (reference_) {
    sums_ = KernelSums{};
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      for (std::size_t j = i + 1; j < slots_.size(); ++j) sums_.within += 2.0 * kernel_(slots_[i], slots_[j]);
      slot_cross_[i] = cross_sum(kernel_, *reference_, slots_[i]);
      sums_.cross += slot_cross_[i];
    }
  }
}

void SlidingWindow::clear() {
  slots_.clear();
  slot_cross_.clear();
  sorted_.clear();
  head_ = 0;
  sum_ = 0.0;
  sums_ = KernelSums{};
  pushes_since_recompute_ = 0;
  if (!reference_) dim_ = 0;
}

// ---------------------------------------------------------------------------
// Statistics

std::int64_t ks_scaled_sorted(std::span<const double> reference_sorted, std::span<const double> window_sorted) {
  const auto n = static_cast<std::int64_t>(reference_sorted.size());
  const auto m = static_cast<std::int64_t>(window_sorted.size());
  std::size_t i = 0;
  std::size_t j = 0;
  std::int64_t best = 0;
  while (i < reference_sorted.size() || j < window_sorted.size()) {
    double u;
    if (i == reference_sorted.size()) {
      u = window_sorted[j];
    } else if (j == window_sorted.size()) {
      u = reference_sorted[i];
    } else {
      u = std::min(reference_sorted[i], window_sorted[j]);
    }
    while (i < reference_sorted.size() && reference_sorted[i] == u) ++i;
    while (j < window_sorted.size() && window_sorted[j] == u) ++j;
    const std::int64_t d = std::llabs(m * static_cast<std::int64_t>(i) - n * static_cast<std::int64_t>(j));
    best = std::max(best, d);
  }
  return best;
}

StatisticValue ks_distance(const ReferenceSet& reference, const SlidingWindow& window) {
  if (!reference.is_scalar() || (window.dim() != 0 && window.dim() != 1)) {
    throw DimensionMismatch("the KS distance is defined for scalar summaries only");
  }
  if (window.empty()) throw InvalidArgument("KS distance needs a non-empty window");
  std::vector<double> win;
  if (window.has_sorted_view()) {
    win.assign(window.sorted_view().begin(), window.sorted_view().end());
  } else {
    win.reserve(window.size());
    for (const auto& s : window.storage()) win.push_back(s.scalar());
    std::sort(win.begin(), win.end());
  }
  const auto scaled = ks_scaled_sorted(reference.sorted_values(), win);
  const double denom = static_cast<double>(reference.size()) * static_cast<double>(win.size());
  return StatisticValue{StatisticKind::ks, static_cast<double>(scaled) / denom};
}

StatisticValue mean_difference(const ReferenceSet& reference, const SlidingWindow& window) {
  if (!reference.is_scalar() || (window.dim() != 0 && window.dim() != 1)) {
    throw DimensionMismatch("the mean difference is defined for scalar summaries only");
  }
  if (window.empty()) throw InvalidArgument("mean difference needs a non-empty window");
  double total = 0.0;
  for (const auto& s : window.storage()) total += s.scalar();
  return StatisticValue{StatisticKind::mean_diff,
                        reference.scalar_mean() - total / static_cast<double>(window.size())};
}

StatisticValue mmd2_u(std::span<const Summary> reference, std::span<const Summary> window, const Kernel& kernel) {
  if (reference.size() < 2 || window.size() < 2) throw InvalidArgument("MMD^2_u needs n >= 2 and m >= 2");
  if (reference.front().dim() != window.front().dim()) {
    throw DimensionMismatch("reference and window dimensions differ");
  }
  auto within = [&](std::span<const Summary> xs) {
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (std::size_t j = i + 1; j < xs.size(); ++j) acc += 2.0 * kernel(xs[i], xs[j]);
    }
    return acc;
  };
  double cross = 0.0;
  for (const auto& x : reference) {
    for (const auto& y : window) cross += kernel(x, y);
  }
  const KernelSums sums{within(window), cross};
  return StatisticValue{StatisticKind::mmd2_u,
                        mmd2_u_from_sums(reference.size(), within(reference), window.size(), sums)};
}

StatisticValue mmd2_u(const ReferenceSet& reference, const SlidingWindow& window, const Kernel& kernel) {
  if (window.size() < 2) throw InvalidArgument("MMD^2_u needs a window of at least 2 items");
  if (window.dim() != reference.dim()) throw DimensionMismatch("reference and window dimensions differ");
  if (!reference.kernel() || !(*reference.kernel() == kernel)) {
    return mmd2_u(std::span<const Summary>(reference.summaries()), window.storage(), kernel);
  }
  KernelSums sums;
  const auto items = window.storage();
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) sums.within += 2.0 * kernel(items[i], items[j]);
    sums.cross += cross_sum(kernel, reference, items[i]);
  }
  return StatisticValue{StatisticKind::mmd2_u,
                        mmd2_u_from_sums(reference.size(), reference.kernel_self_sum(), items.size(), sums)};
}

double median_heuristic(const ReferenceSet& reference) {
  const auto& xs = reference.summaries();
  std::vector<double> distances;
  distances.reserve(xs.size() * (xs.size() - 1) / 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < xs[i].dim(); ++k) {
        const double d = xs[i][k] - xs[j][k];
        d2 += d * d;
      }
      distances.push_back(std::sqrt(d2));
    }
  }
  const std::size_t mid = distances.size() / 2;
  std::nth_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid), distances.end());
  double median = distances[mid];
  if (distances.size() % 2 == 0) {
    const double lower = *std::max_element(distances.begin(), distances.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  if (!(median > 0.0)) {
    throw InvalidArgument("median pairwise distance is zero; specify the kernel bandwidth explicitly");
  }
  return median;
}

}  // namespace seqdrift

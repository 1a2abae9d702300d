#pragma once

#include <memory>
#include <random>
#include <vector>

#include "seqdrift/statistics.hpp"
#include "seqdrift/summaries.hpp"

namespace testing {

inline std::vector<seqdrift::Summary> scalars(const std::vector<double>& v) {
  std::vector<seqdrift::Summary> out;
  for (double x : v) out.push_back(seqdrift::Summary::scalar(x));
  return out;
}

inline std::shared_ptr<const seqdrift::ReferenceSet> scalar_reference(const std::vector<double>& v) {
  return std::make_shared<const seqdrift::ReferenceSet>(scalars(v));
}

inline seqdrift::SlidingWindow filled_window(const std::vector<double>& v) {
  seqdrift::SlidingWindow w(v.size());
  for (double x : v) w.push(seqdrift::Summary::scalar(x));
  return w;
}

/// Values on a coarse grid so ties are common.
inline std::vector<double> tied_sample(std::mt19937_64& rng, std::size_t size, int levels) {
  std::uniform_int_distribution<int> level(0, levels - 1);
  std::vector<double> v(size);
  for (auto& x : v) x = 0.5 * level(rng);
  return v;
}

inline std::vector<double> normal_sample(std::mt19937_64& rng, std::size_t size, double mean = 0.0) {
  std::normal_distribution<double> d(mean, 1.0);
  std::vector<double> v(size);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace testing

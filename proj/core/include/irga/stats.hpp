#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace irga {

// Linear-interpolation sample quantile (R type 7). Takes a copy to sort.
inline double quantile(std::vector<double> values, double prob) {
  if (values.empty()) {
    throw std::invalid_argument("quantile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double pos = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return values[lo] + w * (values[hi] - values[lo]);
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

// Median plus central 68% and 90% intervals.
struct BandSummary {
  double median = 0.0;
  double q16 = 0.0;
  double q84 = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

inline BandSummary summarize_bands(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  auto q = [&](double p) { return quantile(values, p); };
  return {q(0.5), q(0.16), q(0.84), q(0.05), q(0.95)};
}

} // namespace irga

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace trimfit {

// Type-7 quantile (linear interpolation between order statistics) of an
// ascending-sorted sample.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0, 1]");
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  if (lo >= n - 1) return sorted[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace trimfit

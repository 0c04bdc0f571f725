#include "rankfeat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rankfeat/error.hpp"

namespace rankfeat {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidInputError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInputError("quantile level must be in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const double lo = std::floor(h);
  const auto i = static_cast<std::size_t>(lo);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + (h - lo) * (sorted[i + 1] - sorted[i]);
}

double quantile(std::span<const double> values, double q) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, q);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw InvalidInputError("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double median(std::span<const double> values) { return quantile(values, 0.5); }

}  // namespace rankfeat

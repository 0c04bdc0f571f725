#pragma once

#include <span>
#include <vector>

namespace rankfeat {

/// Linear-interpolated quantile between order statistics (type 7):
/// h = (N - 1) q, result = x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h]).
/// `q` in [0, 1]. Throws InvalidInputError on empty input.
double quantile(std::span<const double> values, double q);

/// Same as quantile() but expects `sorted` in ascending order.
double quantile_sorted(std::span<const double> sorted, double q);

double mean(std::span<const double> values);
double median(std::span<const double> values);

}  // namespace rankfeat

#pragma once

#include <span>
#include <vector>

namespace dpl {

double normal_pdf(double z);
/// Standard normal CDF through erfc, accurate in both tails.
double normal_cdf(double z);

/// 1-based ranks; tied values share the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws std::invalid_argument for
/// unequal lengths, fewer than two points, or constant input (zero rank
/// variance).
double spearman(std::span<const double> xs, std::span<const double> ys);

double mean(std::span<const double> values);
/// Sample standard deviation over sqrt(n); 0 for fewer than two values.
double standard_error(std::span<const double> values);

}  // namespace dpl

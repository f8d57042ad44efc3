#pragma once

#include <span>
#include <vector>

namespace duprate::stats {

double mean(std::span<const double> xs);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> xs);
double sd(std::span<const double> xs);

/// Linear-interpolation quantile of unsorted data, p in [0, 1].
double quantile(std::vector<double> xs, double p);
double median(std::vector<double> xs);

/// NaN when either side has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Split-R-hat over equal-length chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size pooled over chains (initial positive sequence).
double effective_sample_size(const std::vector<std::vector<double>>& chains);

/// Pairwise (tree) sum with a fixed association order.
double pairwise_sum(std::span<const double> xs);

}  // namespace duprate::stats

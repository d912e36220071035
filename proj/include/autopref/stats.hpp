#pragma once

#include <span>
#include <vector>

namespace autopref {

// Product-moment correlation. Throws UsageError on length mismatch, fewer
// than two points or zero variance in either input.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Pearson correlation of average ranks (ties share the mean rank).
double spearman(std::span<const double> xs, std::span<const double> ys);

// 1-based ranks; tied values get the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> xs);

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> xs);
double median(std::vector<double> xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};
// Least squares y = slope * x + intercept. Throws on zero variance in x.
LinearFit fit_line(std::span<const double> xs, std::span<const double> ys);

}  // namespace autopref

#ifndef DAIN_STATS_H_
#define DAIN_STATS_H_

#include <span>

namespace dain {

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1 denominator); 0 for a single value.
double sample_stddev(std::span<const double> xs);

// Two-sided p-value of Welch's unequal-variance t-test. Requires at least
// two values per sample. When both samples have zero variance the result is
// 1 if the means are equal and 0 otherwise.
double welch_ttest(std::span<const double> a, std::span<const double> b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares y = slope * x + intercept.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace dain

#endif  // DAIN_STATS_H_

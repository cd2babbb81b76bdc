#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace semibvm {

/// A Monte-Carlo estimate with its standard error.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

double normal_cdf(double x);
double normal_quantile(double p);

/// Sample mean with the usual s/sqrt(N) standard error (0 for N < 2).
McEstimate mean_estimate(std::span<const double> xs);

double sample_variance(std::span<const double> xs);

/// Linear-interpolation quantile (type 7) of a copy of xs; q in [0,1].
double quantile(std::vector<double> xs, double q);
inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

/// Effective sample size by Geyer's initial positive sequence estimator.
double effective_sample_size(std::span<const double> chain);

}  // namespace semibvm

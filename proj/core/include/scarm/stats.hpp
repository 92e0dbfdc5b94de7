#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scarm {

// Standard normal CDF and quantile. The quantile is polished with Newton
// steps against normal_cdf so that normal_cdf(normal_quantile(p)) == p to
// within a few ulps; identities like power(tau=0) == alpha rely on this.
double normal_cdf(double x);
double normal_quantile(double p);

// Pairwise-summation mean: the result does not depend on how the input was
// produced by parallel workers, only on index order.
double mean(std::span<const double> x);
// Unbiased sample variance (n-1 denominator).
double sample_variance(std::span<const double> x);
// Pearson correlation; returns 0 when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

double logit(double p);
double sigmoid(double z);

} // namespace scarm

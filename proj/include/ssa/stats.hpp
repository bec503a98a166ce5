#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ssa::stats {

double mean(const std::vector<double>& xs);

// Standard error of the mean (sample stddev / sqrt(n)); 0 for n < 2.
double stderr_mean(const std::vector<double>& xs);

// Central acceptance interval [lo, hi] (inclusive counts) for k ~ Binomial(m, p):
// lo = min{k : CDF(k) > alpha/2}, hi = min{k : CDF(k) >= 1 - alpha/2}.
// Computed from exact log-space pmf, no normal approximation.
std::pair<std::int64_t, std::int64_t> binomial_acceptance_interval(std::int64_t m, double p,
                                                                   double alpha);

// One-sample Kolmogorov-Smirnov statistic against U(0,1). Sorts a copy.
double ks_statistic_uniform(std::vector<double> xs);

// Asymptotic two-sided KS p-value for statistic d with sample size m.
double ks_pvalue(double d, std::size_t m);

}  // namespace ssa::stats

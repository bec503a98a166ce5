#include "ssa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssa::stats {

double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double stderr_mean(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

std::pair<std::int64_t, std::int64_t> binomial_acceptance_interval(std::int64_t m, double p,
                                                                   double alpha) {
    if (m < 1 || p < 0.0 || p > 1.0 || alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("binomial_acceptance_interval: bad parameters");
    if (p == 0.0) return {0, 0};
    if (p == 1.0) return {m, m};

    // logpmf(k) via the recurrence logpmf(k+1) = logpmf(k) + log((m-k)p) - log((k+1)(1-p));
    // exp() underflow far from the mode is harmless: those terms are < 1e-300 << alpha.
    const double logp = std::log(p), log1p_ = std::log1p(-p);
    double lp = static_cast<double>(m) * log1p_;  // logpmf(0)
    double cdf = 0.0;
    std::int64_t lo = -1, hi = -1;
    const double a2 = alpha / 2.0;
    for (std::int64_t k = 0; k <= m; ++k) {
        if (k > 0) {
            lp += std::log(static_cast<double>(m - k + 1)) + logp -
                  std::log(static_cast<double>(k)) - log1p_;
        }
        cdf += std::exp(lp);
        if (lo < 0 && cdf > a2) lo = k;
        if (hi < 0 && cdf >= 1.0 - a2) {
            hi = k;
            break;
        }
    }
    if (lo < 0) lo = m;
    if (hi < 0) hi = m;
    return {lo, hi};
}

double ks_statistic_uniform(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("ks_statistic_uniform: empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double cdf = std::min(std::max(xs[i], 0.0), 1.0);
        const double d_plus = (static_cast<double>(i) + 1.0) / n - cdf;
        const double d_minus = cdf - static_cast<double>(i) / n;
        d = std::max({d, d_plus, d_minus});
    }
    return d;
}

double ks_pvalue(double d, std::size_t m) {
    // Kolmogorov asymptotic tail Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)
    // with the small-sample shift of Stephens.
    const double sn = std::sqrt(static_cast<double>(m));
    const double x = (sn + 0.12 + 0.11 / sn) * d;
    if (x < 1e-3) return 1.0;
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * x * x);
        q += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::min(1.0, std::max(0.0, q));
}

}  // namespace ssa::stats

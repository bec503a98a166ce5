#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ssa/rng.hpp"
#include "ssa/stats.hpp"

using namespace ssa;

TEST_CASE("mean and standard error") {
    CHECK(stats::mean({1.0, 2.0, 3.0}) == doctest::Approx(2.0));
    CHECK(stats::stderr_mean({1.0, 2.0, 3.0}) == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(stats::stderr_mean({5.0}) == 0.0);
    CHECK(stats::mean({}) == 0.0);
}

TEST_CASE("binomial acceptance intervals match an exact external computation") {
    // Reference values computed with scipy.stats.binom under the same
    // definition: lo = min{k : CDF(k) > a/2}, hi = min{k : CDF(k) >= 1-a/2}.
    CHECK(stats::binomial_acceptance_interval(10000, 0.5, 0.01) ==
          std::pair<std::int64_t, std::int64_t>{4871, 5129});
    CHECK(stats::binomial_acceptance_interval(100000, 0.9, 0.01) ==
          std::pair<std::int64_t, std::int64_t>{89755, 90244});
    CHECK(stats::binomial_acceptance_interval(100000, 0.5, 0.01) ==
          std::pair<std::int64_t, std::int64_t>{49593, 50407});
    CHECK(stats::binomial_acceptance_interval(20, 0.3, 0.05) ==
          std::pair<std::int64_t, std::int64_t>{2, 10});
    CHECK(stats::binomial_acceptance_interval(100000, 1.0 / 256.0, 0.0001) ==
          std::pair<std::int64_t, std::int64_t>{316, 470});
}

TEST_CASE("binomial acceptance interval edge cases") {
    CHECK(stats::binomial_acceptance_interval(50, 0.0, 0.01) ==
          std::pair<std::int64_t, std::int64_t>{0, 0});
    CHECK(stats::binomial_acceptance_interval(50, 1.0, 0.01) ==
          std::pair<std::int64_t, std::int64_t>{50, 50});
    CHECK_THROWS(stats::binomial_acceptance_interval(0, 0.5, 0.01));
    CHECK_THROWS(stats::binomial_acceptance_interval(10, 0.5, 0.0));
}

TEST_CASE("ks statistic on a tiny known sample") {
    CHECK(stats::ks_statistic_uniform({0.5}) == doctest::Approx(0.5));
    CHECK(stats::ks_statistic_uniform({0.25, 0.75}) == doctest::Approx(0.25));
}

TEST_CASE("ks test accepts uniform draws and rejects a squashed sample") {
    Rng rng(99);
    std::vector<double> uniform, squashed;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.unit();
        uniform.push_back(u);
        squashed.push_back(u * u);  // CDF sqrt(x), far from uniform
    }
    const double d_ok = stats::ks_statistic_uniform(uniform);
    CHECK(stats::ks_pvalue(d_ok, uniform.size()) > 0.05);
    const double d_bad = stats::ks_statistic_uniform(squashed);
    CHECK(stats::ks_pvalue(d_bad, squashed.size()) < 0.001);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mapreplay/error.hpp"
#include "mapreplay/stats.hpp"

namespace mapreplay {
namespace {

// Exact upper tail of Binomial(n, 1/2) from Pascal's triangle.
double exact_half_tail(unsigned k, unsigned n) {
  std::vector<long double> row{1};
  for (unsigned i = 0; i < n; ++i) {
    std::vector<long double> next(row.size() + 1, 0);
    for (std::size_t j = 0; j < row.size(); ++j) {
      next[j] += row[j];
      next[j + 1] += row[j];
    }
    row = std::move(next);
  }
  long double tail = 0;
  for (unsigned j = k; j <= n; ++j) tail += row[j];
  return static_cast<double>(tail / std::pow(2.0L, n));
}

std::vector<double> normal_samples(std::mt19937_64& g, std::size_t n, double mu, double sigma) {
  std::normal_distribution<double> d(mu, sigma);
  std::vector<double> v(n);
  for (double& x : v) x = d(g);
  return v;
}

TEST(Binomial, EighteenOfTwentyOne) {
  // (C(21,18) + C(21,19) + C(21,20) + C(21,21)) / 2^21 = 1562 / 2097152
  EXPECT_NEAR(binomial_test_one_sided(18, 21, 0.5), 1562.0 / 2097152.0, 1e-12);
  EXPECT_NEAR(binomial_test_one_sided(18, 21, 0.5), 0.0007, 5e-5);
}

TEST(Binomial, Edges) {
  EXPECT_DOUBLE_EQ(binomial_test_one_sided(0, 13, 0.5), 1.0);
  EXPECT_NEAR(binomial_test_one_sided(21, 21, 0.5), std::ldexp(1.0, -21), 1e-15);
  EXPECT_DOUBLE_EQ(binomial_test_one_sided(0, 0, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(binomial_test_one_sided(3, 5, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(binomial_test_one_sided(5, 5, 1.0), 1.0);
  EXPECT_THROW(binomial_test_one_sided(6, 5), StatsError);
}

TEST(Binomial, MatchesPascalTriangle) {
  for (unsigned n = 1; n <= 80; n += 3) {
    for (unsigned k = 0; k <= n; ++k) {
      const double want = exact_half_tail(k, n);
      EXPECT_NEAR(binomial_test_one_sided(k, n), want, 1e-12 + 1e-9 * want) << k << "/" << n;
    }
  }
}

TEST(Binomial, MonotoneInSuccessesAndP0) {
  for (unsigned k = 1; k <= 30; ++k) {
    EXPECT_LE(binomial_test_one_sided(k, 30, 0.4), binomial_test_one_sided(k - 1, 30, 0.4));
    EXPECT_LE(binomial_test_one_sided(k, 30, 0.3), binomial_test_one_sided(k, 30, 0.6));
  }
}

TEST(CohensH, Values) {
  EXPECT_NEAR(cohens_h(0.857, 0.5), 0.796, 1e-3);
  EXPECT_DOUBLE_EQ(cohens_h(0.3, 0.3), 0.0);
  EXPECT_NEAR(cohens_h(1.0, 0.0), std::numbers::pi, 1e-12);
  EXPECT_NEAR(cohens_h(0.2, 0.7), -cohens_h(0.7, 0.2), 1e-15);
  EXPECT_THROW(cohens_h(1.2, 0.5), StatsError);
}

TEST(Pearson, Values) {
  const std::vector<double> xs{1, 2, 3, 4, 5};
  std::vector<double> lin, neg;
  for (double x : xs) {
    lin.push_back(2 * x + 1);
    neg.push_back(-x);
  }
  EXPECT_NEAR(pearson_r(xs, lin), 1.0, 1e-12);
  EXPECT_NEAR(pearson_r(xs, neg), -1.0, 1e-12);
  EXPECT_NEAR(pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-12);
  EXPECT_THROW(pearson_r(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), StatsError);
  EXPECT_THROW(pearson_r(std::vector<double>{1, 2}, std::vector<double>{1, 2}), StatsError);
  EXPECT_THROW(pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), StatsError);
}

TEST(Pearson, BoundedAndSymmetric) {
  std::mt19937_64 g(5);
  for (int t = 0; t < 100; ++t) {
    const auto xs = normal_samples(g, 3 + t % 20, 0, 1);
    const auto ys = normal_samples(g, xs.size(), 0, 1);
    const double r = pearson_r(xs, ys);
    EXPECT_GE(r, -1.0 - 1e-12);
    EXPECT_LE(r, 1.0 + 1e-12);
    EXPECT_NEAR(r, pearson_r(ys, xs), 1e-12);
  }
}

TEST(Bootstrap, DegenerateInputs) {
  const std::vector<double> c{5, 5, 5};
  EXPECT_EQ(bootstrap_ci_diff(c, c), (Interval{0, 0}));
  EXPECT_EQ(bootstrap_ci_diff(std::vector<double>{10, 10, 10}, std::vector<double>{8, 8, 8}), (Interval{2, 2}));
  EXPECT_EQ(bootstrap_ci_mean(c), (Interval{5, 5}));
  EXPECT_THROW(bootstrap_ci_mean(std::vector<double>{1}), StatsError);
  EXPECT_THROW(bootstrap_ci_diff(std::vector<double>{1}, c), StatsError);
  EXPECT_THROW(bootstrap_ci_mean(std::vector<double>{1, 2}, 1.0), StatsError);
}

TEST(Bootstrap, DeterministicForASeed) {
  std::mt19937_64 g(1);
  const auto a = normal_samples(g, 25, 10, 1);
  const auto b = normal_samples(g, 25, 10, 1);
  EXPECT_EQ(bootstrap_ci_diff(a, b, 0.99, 5000, 7), bootstrap_ci_diff(a, b, 0.99, 5000, 7));
  EXPECT_NE(bootstrap_ci_diff(a, b, 0.99, 5000, 7), bootstrap_ci_diff(a, b, 0.99, 5000, 8));
}

TEST(Bootstrap, HigherLevelGivesWiderInterval) {
  std::mt19937_64 g(2);
  for (int t = 0; t < 30; ++t) {
    const auto a = normal_samples(g, 10 + t, 10, 2);
    const auto b = normal_samples(g, 12, 9, 1);
    const Interval wide = bootstrap_ci_diff(a, b, 0.99, 4000, t);
    const Interval narrow = bootstrap_ci_diff(a, b, 0.95, 4000, t);
    EXPECT_LE(wide.lo, narrow.lo);
    EXPECT_GE(wide.hi, narrow.hi);
    const Interval m = bootstrap_ci_mean(a, 0.99, 4000, t);
    EXPECT_TRUE(m.contains(mean(a)));
  }
}

TEST(Bootstrap, CalibratedUnderTheNull) {
  // Same distribution on both sides: the 99% interval must straddle zero in
  // at least 95 of 100 seeded trials.
  int straddle = 0;
  for (int t = 0; t < 100; ++t) {
    std::mt19937_64 g(1000 + t);
    const auto a = normal_samples(g, 25, 10, 1);
    const auto b = normal_samples(g, 25, 10, 1);
    straddle += bootstrap_ci_diff(a, b, 0.99, 50000, t).contains(0);
  }
  EXPECT_GE(straddle, 95);
}

TEST(Bootstrap, DetectsARealShift) {
  std::mt19937_64 g(9);
  const auto a = normal_samples(g, 25, 12, 1);
  const auto b = normal_samples(g, 25, 10, 1);
  const Interval ci = bootstrap_ci_diff(a, b, 0.99, 20000, 1);
  EXPECT_GT(ci.lo, 0);
  EXPECT_TRUE(ci.contains(mean(a) - mean(b)));
}

TEST(Classify, KnownRows) {
  Characterization intensive;
  intensive.events = 9600913;
  EXPECT_EQ(classify(intensive, 0.1644), MapUsage::Intensive);
  Characterization light;
  light.events = 27815;
  EXPECT_EQ(classify(light, 0.0002), MapUsage::Minimal);
  Characterization boundary;
  boundary.events = 100000;
  EXPECT_EQ(classify(boundary), MapUsage::Moderate);
  boundary.events = 99999;
  EXPECT_EQ(classify(boundary), MapUsage::Minimal);
  EXPECT_EQ(classify(light, 0.05), MapUsage::Intensive);
  EXPECT_STREQ(to_string(MapUsage::Moderate), "moderate");
}

}  // namespace
}  // namespace mapreplay

// SPDX-License-Identifier: Apache-2.0
#include <qoe/metrics.hpp>
#include <qoe/numerics.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

namespace qoe {
namespace {

using V = std::vector<double>;

TEST(Lcc, IdentityReversalAndHandValue) {
  const V a{1, 5, 2, 8};
  EXPECT_EQ(lcc(a, a).value, 1.0);
  EXPECT_EQ(lcc(a, V{-1, -5, -2, -8}).value, -1.0);
  EXPECT_NEAR(lcc(V{1, 2, 3}, V{1, 2, 4}).value, 0.9819805060619657, 1e-15);
}

TEST(Lcc, ConstantIsUndefined) {
  const auto r = lcc(V{1, 1, 1}, V{1, 2, 3});
  EXPECT_FALSE(r.defined());
  EXPECT_TRUE(std::isnan(r.value));
  EXPECT_EQ(r.undefined_reason, "constant series");
}

TEST(Lcc, RejectsMismatch) {
  EXPECT_THROW(lcc(V{1, 2}, V{1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(lcc(V{1}, V{1}), std::invalid_argument);
}

TEST(Srocc, MonotoneReversedAndTies) {
  const V a{0.3, 1.7, -2, 9};
  V cubed;
  for (double v : a) cubed.push_back(v * v * v + 4);
  EXPECT_EQ(srocc(a, cubed).value, 1.0);
  EXPECT_EQ(srocc(a, V{-0.3, -1.7, 2, -9}).value, -1.0);
  EXPECT_EQ(fractional_ranks(V{1, 2, 2, 3}), (V{1, 2.5, 2.5, 4}));
  EXPECT_NEAR(srocc(V{1, 2, 2, 3}, V{10, 20, 30, 40}).value, 0.9486832980505138, 1e-15);
}

TEST(RmseN, Cases) {
  const QoeScale s{0, 100};
  EXPECT_EQ(rmse_n(V{1, 2}, V{1, 2}, s), 0.0);
  EXPECT_DOUBLE_EQ(rmse_n(V{20, 30, 40}, V{10, 20, 30}, s), 10.0);
  EXPECT_NEAR(rmse_n(V{3, 4}, V{0, 0}, s), 3.5355339059327378, 1e-13);
  EXPECT_THROW(rmse_n(V{}, V{}, s), std::invalid_argument);
}

TEST(Outage, Cases) {
  const QoeScale s{0, 100};
  EXPECT_EQ(outage_rate(V{1, 2}, V{1, 2}, s), 0.0);
  EXPECT_EQ(outage_rate(V{20, 20}, V{0, 0}, s), 100.0);
  EXPECT_EQ(outage_rate(V{5, 15, 11, 2}, V{0, 0, 0, 0}, s, 0.10), 50.0);
  EXPECT_THROW(outage_rate(V{1}, V{1}, s, 0.0), std::invalid_argument);
  EXPECT_THROW(outage_rate(V{1}, V{1}, s, -0.1), std::invalid_argument);
}

TEST(Pooling, MeanAndMedian) {
  EXPECT_EQ(pool(V{1, 2, 100}, Pooling::median), 2.0);
  EXPECT_NEAR(pool(V{1, 2, 100}, Pooling::mean), 34.333333333333336, 1e-12);
  EXPECT_EQ(pool(V{4, 1, 3, 2}, Pooling::median), 2.5);
  EXPECT_THROW(pool(V{}, Pooling::mean), std::invalid_argument);
  EXPECT_EQ(parse_pooling("median"), Pooling::median);
  EXPECT_THROW(parse_pooling("max"), std::invalid_argument);
}

TEST(Pooling, OverallIdentity) {
  const std::vector<V> series{{1, 2, 3}, {5, 5, 8}, {0, 1, 0}, {9, 9, 9}};
  V overall;
  for (const auto &s : series) overall.push_back(pool(s, Pooling::mean));
  const auto r = pool_overall(series, overall, Pooling::mean);
  EXPECT_EQ(r.lcc.value, 1.0);
  EXPECT_EQ(r.srocc.value, 1.0);
}

TEST(Summary, SkipsUndefined) {
  const auto s = summarize(V{0.5, std::nan(""), 0.7, 0.9});
  EXPECT_EQ(s.count, 3u);
  EXPECT_EQ(s.skipped, 1u);
  EXPECT_DOUBLE_EQ(s.mean, 0.7);
  EXPECT_EQ(s.median, 0.7);
}

// Random pairs against the brute-force definitions. Half the pairs are
// quantized so that ties occur.
TEST(Oracle, ThousandRandomPairs) {
  Rng rng(2024);
  const QoeScale scale{0, 100};
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(60));
    V a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(0, 100);
      b[i] = 0.6 * a[i] + rng.uniform(-30, 30);
      if (k % 2) {
        a[i] = std::round(a[i] / 10);
        b[i] = std::round(b[i] / 10);
      }
    }
    const auto r = lcc(a, b);
    const auto s = srocc(a, b);
    if (r.defined()) {
      EXPECT_NEAR(r.value, oracle::pearson(a, b), 1e-10);
    }
    if (s.defined()) {
      EXPECT_NEAR(s.value, oracle::spearman(a, b), 1e-10);
    }
    EXPECT_NEAR(rmse_n(a, b, scale), oracle::rmse_percent(a, b, 0, 100), 1e-10);
    EXPECT_EQ(outage_rate(a, b, scale, 0.1), oracle::outage_percent(a, b, 0, 100, 0.1));
  }
}

TEST(Properties, AffineInvarianceAndRankOnly) {
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    V a(30), b(30), a2(30), b3(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = rng.uniform(-5, 5);
      b[i] = a[i] + rng.normal();
      a2[i] = 3.5 * a[i] + 7;
      b3[i] = std::exp(b[i]); // rank preserving
    }
    EXPECT_NEAR(lcc(a2, b).value, lcc(a, b).value, 1e-12);
    EXPECT_NEAR(srocc(a2, b).value, srocc(a, b).value, 1e-12);
    EXPECT_EQ(srocc(a, b3).value, srocc(a, b).value);
  }
}

TEST(Properties, RmseJointRescaleAndOutageMonotone) {
  Rng rng(12);
  V p(50), t(50), p2(50), t2(50);
  for (std::size_t i = 0; i < 50; ++i) {
    p[i] = rng.uniform(0, 100);
    t[i] = rng.uniform(0, 100);
    p2[i] = 1 + 0.04 * p[i];
    t2[i] = 1 + 0.04 * t[i];
  }
  EXPECT_NEAR(rmse_n(p, t, {0, 100}), rmse_n(p2, t2, {1, 5}), 1e-10);
  double prev = 101;
  for (double d = 0.01; d < 1.0; d += 0.01) {
    const double o = outage_rate(p, t, {0, 100}, d);
    EXPECT_LE(o, prev);
    prev = o;
  }
}

TEST(Report, AggregateCountsUndefined) {
  MetricsReport r;
  SessionMetrics a, b;
  a.lcc = {0.8, {}};
  a.srocc = {0.7, {}};
  b.lcc = {std::nan(""), "constant series"};
  b.srocc = {0.5, {}};
  a.rmse_n_percent = 2;
  b.rmse_n_percent = 4;
  r.sessions = {a, b};
  r.aggregate();
  EXPECT_EQ(r.lcc.count, 1u);
  EXPECT_EQ(r.lcc.skipped, 1u);
  EXPECT_DOUBLE_EQ(r.srocc.mean, 0.6);
  EXPECT_DOUBLE_EQ(r.rmse_n.median, 3.0);
}

} // namespace
} // namespace qoe

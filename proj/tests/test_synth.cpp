// SPDX-License-Identifier: Apache-2.0
#include <qoe/synth.hpp>

#include <gtest/gtest.h>

#include <map>
#include <set>

namespace qoe {
namespace {

using Flags = std::vector<std::uint8_t>;

TEST(Oracle, MaxQualityFixedPoint) {
  OracleParams p;
  p.alpha = 0.5;
  p.memory = 3;
  const std::vector<double> s(30, 1.0);
  for (double q : oracle_qoe(s, Flags(30, 1), p)) EXPECT_EQ(q, 100.0);
}

TEST(Oracle, StallClosedForm) {
  OracleParams p;
  const std::vector<double> s(20, 0.6);
  Flags playing(20, 1);
  for (std::size_t t = 10; t < 15; ++t) playing[t] = 0;
  const auto q = oracle_qoe(s, playing, p);
  EXPECT_EQ(q[9], 60.0); // steady state
  EXPECT_DOUBLE_EQ(q[14], std::max(0.0, 60.0 - 5 * p.beta));

  p.beta = 30;
  EXPECT_EQ(oracle_qoe(s, playing, p)[14], 0.0);
}

TEST(Oracle, PostStallRecoveryIsDamped) {
  OracleParams p;
  const std::vector<double> s(12, 0.8);
  Flags playing(12, 1);
  playing[3] = 0;
  const auto q = oracle_qoe(s, playing, p);
  EXPECT_DOUBLE_EQ(q[4], q[3] + p.rho * (1 - p.alpha) * (80.0 - q[3]));
}

TEST(Oracle, RejectsBadParams) {
  const std::vector<double> s{0.5};
  const Flags f{1};
  for (auto bad : {OracleParams{1.0, 4, 5, 0.5}, OracleParams{0.7, 0, 5, 0.5}, OracleParams{0.7, 4, 0, 0.5},
                   OracleParams{0.7, 4, 5, 0.0}})
    EXPECT_THROW(oracle_qoe(s, f, bad), std::invalid_argument);
}

TEST(Corpus, ShapesAndMetadata) {
  SynthConfig cfg;
  cfg.n_contents = 3;
  cfg.n_patterns = 5;
  const auto c = gen_corpus(cfg);
  EXPECT_EQ(c.traces.size(), 15u);
  EXPECT_NO_THROW(c.validate_metadata());
  std::set<std::string> contents, patterns;
  for (const auto &t : c.traces) {
    contents.insert(t.content_id);
    patterns.insert(t.pattern_id);
    EXPECT_EQ(t.duration(), cfg.duration);
    ASSERT_TRUE(t.qoe && t.overall_qoe);
  }
  EXPECT_EQ(contents.size(), 3u);
  EXPECT_EQ(patterns.size(), 5u);

  SynthConfig full;
  EXPECT_EQ(gen_corpus(full).traces.size(), 112u);
  full.n_contents = full.n_patterns = 1;
  EXPECT_EQ(gen_corpus(full).traces.size(), 1u);
}

TEST(Corpus, Deterministic) {
  SynthConfig cfg;
  EXPECT_EQ(gen_trace(cfg, 4, 3), gen_trace(cfg, 4, 3));
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(gen_trace(cfg, 4, 3).stsq, gen_trace(other, 4, 3).stsq);
  EXPECT_THROW(gen_trace(cfg, 14, 0), std::out_of_range);
}

TEST(Corpus, PatternsShareStallsContentsShareOffset) {
  SynthConfig cfg;
  EXPECT_EQ(gen_trace(cfg, 0, 3).playing, gen_trace(cfg, 9, 3).playing);
  EXPECT_NE(gen_trace(cfg, 0, 3).playing, gen_trace(cfg, 0, 2).playing);
  std::size_t stalled = 0;
  for (std::size_t j = 0; j < cfg.n_patterns; ++j) {
    const auto tr = gen_trace(cfg, 0, j);
    EXPECT_EQ(tr.playing.front(), 1);
    EXPECT_EQ(tr.playing.back(), 1);
    stalled += static_cast<std::size_t>(std::count(tr.playing.begin(), tr.playing.end(), 0));
  }
  EXPECT_GT(stalled, 0u);
}

TEST(Properties, BoundsAndStallMonotonicity) {
  SynthConfig cfg;
  for (const auto &tr : gen_corpus(cfg).traces) {
    const auto &q = *tr.qoe;
    for (std::size_t t = 0; t < q.size(); ++t) {
      EXPECT_GE(q[t], 0.0);
      EXPECT_LE(q[t], 100.0);
      if (t > 0 && !tr.playing[t]) {
        EXPECT_LE(q[t], q[t - 1]);
      }
    }
    double sum = 0;
    for (double v : q) sum += v;
    EXPECT_DOUBLE_EQ(*tr.overall_qoe, sum / static_cast<double>(q.size()));
  }
}

// Look for two histories with the same (q(t-1), x(t)) but different q(t).
TEST(Properties, NonMarkovWitness) {
  OracleParams p;
  Rng rng(99);
  std::map<std::pair<long long, long long>, double> seen;
  bool found = false;
  for (int trial = 0; trial < 2000 && !found; ++trial) {
    std::vector<double> s(12);
    for (double &v : s) v = 0.1 * static_cast<double>(rng.below(11));
    const auto q = oracle_qoe(s, Flags(12, 1), p);
    for (std::size_t t = 1; t < 12 && !found; ++t) {
      const auto key = std::make_pair(std::llround(q[t - 1] * 1e9), std::llround(s[t] * 1e9));
      const auto [it, inserted] = seen.emplace(key, q[t]);
      if (!inserted && std::abs(it->second - q[t]) > 1e-6) found = true;
    }
  }
  EXPECT_TRUE(found);
}

} // namespace
} // namespace qoe

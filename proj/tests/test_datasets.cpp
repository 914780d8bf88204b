// SPDX-License-Identifier: Apache-2.0
#include <qoe/datasets.hpp>

#include <gtest/gtest.h>

#include <set>

namespace qoe {
namespace {

SessionTrace video(std::string id, std::string content, std::string pattern) {
  SessionTrace t;
  t.video_id = std::move(id);
  t.content_id = std::move(content);
  t.pattern_id = std::move(pattern);
  t.stsq = {0.5};
  t.playing = {1};
  return t;
}

Corpus grid(std::size_t contents, std::size_t patterns) {
  Corpus c{"grid", {}};
  for (std::size_t i = 0; i < contents; ++i)
    for (std::size_t j = 0; j < patterns; ++j)
      c.traces.push_back(video("v" + std::to_string(i) + "_" + std::to_string(j), "c" + std::to_string(i),
                               "p" + std::to_string(j)));
  return c;
}

// 36 videos, each combining one of 6 quality patterns with one of 6
// rebuffering patterns.
Corpus lfovia_shape() {
  Corpus c{"lfovia-shape", {}};
  for (std::size_t q = 0; q < 6; ++q)
    for (std::size_t r = 0; r < 6; ++r)
      c.traces.push_back(video("q" + std::to_string(q) + "r" + std::to_string(r), "src" + std::to_string((q + r) % 18),
                               "q" + std::to_string(q) + "+r" + std::to_string(r)));
  return c;
}

TEST(Netflix, FullGridTrainsOn91) {
  const auto c = grid(14, 8);
  const auto plan = split_netflix(c);
  ASSERT_EQ(plan.folds.size(), 112u);
  for (const auto &f : plan.folds) {
    EXPECT_EQ(f.train_ids.size(), 91u);
    EXPECT_EQ(f.test_ids.size(), 1u);
    EXPECT_FALSE(f.degenerate);
  }
  EXPECT_EQ(count_leaks(plan, c), 0u);
}

TEST(Netflix, InclusionExclusionSmall) {
  for (const auto &f : split_netflix(grid(3, 2)).folds) EXPECT_EQ(f.train_ids.size(), 2u);
}

TEST(Netflix, SingleVideoIsDegenerate) {
  const auto plan = split_netflix(grid(1, 1));
  ASSERT_EQ(plan.folds.size(), 1u);
  EXPECT_TRUE(plan.folds[0].degenerate);
  EXPECT_EQ(plan.degenerate_count(), 1u);
}

TEST(Netflix, MissingMetadataRejected) {
  auto c = grid(2, 2);
  c.traces[1].pattern_id.clear();
  EXPECT_THROW(split_netflix(c), std::invalid_argument);
  c = grid(2, 2);
  c.traces[1].video_id = c.traces[0].video_id;
  EXPECT_THROW(split_netflix(c), std::invalid_argument);
}

TEST(Lfovia, SixBySixTrainsOn25) {
  const auto c = lfovia_shape();
  const auto plan = split_lfovia(c);
  ASSERT_EQ(plan.folds.size(), 36u);
  for (const auto &f : plan.folds) EXPECT_EQ(f.train_ids.size(), 25u);
  EXPECT_EQ(count_leaks(plan, c), 0u);
}

TEST(Lfovia, DistinctPatternsTrainOnRest) {
  Corpus c{"x", {}};
  for (int i = 0; i < 5; ++i) c.traces.push_back(video("v" + std::to_string(i), "c", "p" + std::to_string(i)));
  for (const auto &f : split_lfovia(c).folds) EXPECT_EQ(f.train_ids.size(), 4u);
}

TEST(Lfovia, PatternPairs) {
  Corpus c{"x", {}};
  for (int i = 0; i < 6; ++i)
    c.traces.push_back(video("v" + std::to_string(i), "c" + std::to_string(i), "p" + std::to_string(i / 2)));
  for (const auto &f : split_lfovia(c).folds) EXPECT_EQ(f.train_ids.size(), 4u);
}

TEST(PatternComponents, CompoundIds) {
  EXPECT_EQ(pattern_components("q2+r5"), (std::vector<std::string>{"q2", "r5"}));
  EXPECT_EQ(pattern_components("p1"), (std::vector<std::string>{"p1"}));
  EXPECT_TRUE(shares_pattern(video("a", "c", "q2+r5"), video("b", "c", "q1+r5")));
  EXPECT_FALSE(shares_pattern(video("a", "c", "q2+r5"), video("b", "c", "q1+r4")));
}

TEST(LeaveOut, LiveQoeShape) {
  const auto c = grid(3, 5);
  const auto plan = split_leave_p_out(c, 5);
  ASSERT_EQ(plan.folds.size(), 3u);
  for (const auto &f : plan.folds) {
    EXPECT_EQ(f.train_ids.size(), 10u);
    EXPECT_EQ(f.test_ids.size(), 5u);
  }
  EXPECT_EQ(count_leaks(plan, c), 0u);
}

TEST(LeaveOut, WholeCorpusIsDegenerate) {
  const auto plan = split_leave_p_out(grid(3, 5), 15);
  ASSERT_EQ(plan.folds.size(), 1u);
  EXPECT_TRUE(plan.folds[0].degenerate);
}

TEST(LeaveOut, TwoByTwo) {
  for (const auto &f : split_leave_p_out(grid(2, 2), 2).folds) EXPECT_EQ(f.train_ids.size(), 2u);
}

TEST(LeaveOut, ContentAndPatternRule) {
  const auto c = grid(3, 5);
  const auto plan = split_leave_p_out(c, 5, LeaveOutRule::content_and_pattern);
  for (const auto &f : plan.folds) EXPECT_TRUE(f.degenerate); // every pattern appears in each content
  const auto plan2 = split_leave_p_out(c, 1, LeaveOutRule::content_and_pattern);
  for (const auto &f : plan2.folds) EXPECT_EQ(f.train_ids.size(), 8u);
  EXPECT_EQ(count_leaks(plan2, c, LeaveOutRule::content_and_pattern), 0u);
}

TEST(Random, Of174TrainsOn138) {
  Corpus c{"x", {}};
  for (int i = 0; i < 174; ++i)
    c.traces.push_back(video("v" + std::to_string(i), "c" + std::to_string(i), "p" + std::to_string(i)));
  Rng rng(3);
  const auto plan = split_random(c, 0.8, rng);
  ASSERT_EQ(plan.folds.size(), 174u);
  for (const auto &f : plan.folds) {
    EXPECT_EQ(f.train_ids.size(), 138u);
    EXPECT_EQ(std::count(f.train_ids.begin(), f.train_ids.end(), f.test_ids[0]), 0);
  }
  EXPECT_EQ(count_leaks(plan, c), 0u);
}

TEST(Random, SeededAndValidated) {
  const auto c = grid(4, 4);
  Rng a(9), b(9), e(10);
  EXPECT_EQ(split_random(c, 0.5, a), split_random(c, 0.5, b));
  EXPECT_NE(split_random(c, 0.5, a), split_random(c, 0.5, e));
  EXPECT_THROW(split_random(c, 0.0, a), std::invalid_argument);
  EXPECT_THROW(split_random(c, 1.0, a), std::invalid_argument);
}

TEST(Fixed, HalfOfTwo) {
  Rng rng(1);
  const auto plan = split_fixed(grid(1, 2), 0.5, rng);
  ASSERT_EQ(plan.folds.size(), 1u);
  EXPECT_EQ(plan.folds[0].train_ids.size(), 1u);
  EXPECT_EQ(plan.folds[0].test_ids.size(), 1u);
}

TEST(Fixed, EightyTwentyPartition) {
  const auto c = grid(14, 8);
  Rng rng(5);
  const auto plan = split_fixed(c, 0.8, rng);
  const auto &f = plan.folds.at(0);
  EXPECT_EQ(f.train_ids.size(), 90u);
  EXPECT_EQ(f.test_ids.size(), 22u);
  std::set<std::string> all(f.train_ids.begin(), f.train_ids.end());
  all.insert(f.test_ids.begin(), f.test_ids.end());
  EXPECT_EQ(all.size(), 112u);
  EXPECT_EQ(count_leaks(plan, c), 0u);
}

TEST(Protocol, NamesRoundTrip) {
  for (auto p : {Protocol::netflix_style, Protocol::lfovia_style, Protocol::leave_p_out, Protocol::random_fraction,
                 Protocol::fixed_fraction_80_20})
    EXPECT_EQ(parse_protocol(to_string(p)), p);
  EXPECT_THROW(parse_protocol("kfold"), std::invalid_argument);
}

TEST(Leaks, DetectsPlantedViolation) {
  const auto c = grid(3, 3);
  auto plan = split_netflix(c);
  plan.folds[0].train_ids.push_back(c.traces[1].video_id); // same content as test video 0
  EXPECT_EQ(count_leaks(plan, c), 1u);
}

} // namespace
} // namespace qoe

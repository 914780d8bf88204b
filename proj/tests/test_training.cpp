// SPDX-License-Identifier: Apache-2.0
#include <qoe/io.hpp>
#include <qoe/metrics.hpp>
#include <qoe/synth.hpp>
#include <qoe/training.hpp>

#include <gtest/gtest.h>

namespace qoe {
namespace {

SessionTrace constant_target_trace(std::size_t T, double q, std::uint64_t seed) {
  Rng rng(seed);
  SessionTrace t;
  t.video_id = "k" + std::to_string(seed);
  t.content_id = "c";
  t.pattern_id = "p";
  for (std::size_t i = 0; i < T; ++i) {
    t.stsq.push_back(rng.uniform());
    t.playing.push_back(i % 17 == 5 ? 0 : 1);
  }
  t.qoe = std::vector<double>(T, q);
  return t;
}

FeatureSeries series_of(std::size_t T) {
  FeatureSeries s;
  s.x.assign(T, Vector{0.5, 1.0, 0.1});
  return s;
}

TEST(Windows, Counts) {
  EXPECT_EQ(make_windows(series_of(4), std::vector<double>(4, 0.0), 4).size(), 1u);
  EXPECT_EQ(make_windows(series_of(120), std::vector<double>(120, 0.0), 4).size(), 117u);
  const auto w1 = make_windows(series_of(9), std::vector<double>(9, 0.0), 1);
  EXPECT_EQ(w1.size(), 9u);
  for (const auto &w : w1) EXPECT_EQ(w.x.size(), 1u);
}

TEST(Windows, StrideOneContents) {
  FeatureSeries s;
  std::vector<double> y;
  for (int t = 0; t < 6; ++t) {
    s.x.push_back(Vector{static_cast<double>(t)});
    y.push_back(10.0 * t);
  }
  const auto w = make_windows(s, y, 3);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w[2].x[0][0], 2.0);
  EXPECT_EQ(w[2].y[2], 40.0);
}

TEST(Windows, ShortTraceNamed) {
  try {
    make_windows(series_of(3), std::vector<double>(3, 0.0), 4, "short_one");
    FAIL();
  } catch (const std::invalid_argument &e) {
    EXPECT_NE(std::string(e.what()).find("short_one"), std::string::npos);
  }
}

TEST(Config, Validation) {
  TrainConfig c;
  c.timestep = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Fit, ConstantTargetConverges) {
  std::vector<SessionTrace> train;
  for (std::uint64_t k = 1; k <= 64; ++k) train.push_back(constant_target_trace(120, 70.0, k));
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 3;
  const auto model = fit(train, {1, 4, 3}, cfg);
  EXPECT_LT(model.provenance.final_loss, model.provenance.initial_loss);
  const auto test = constant_target_trace(120, 70.0, 99);
  const auto y = predict(model, test);
  EXPECT_LT(rmse_n(y, *test.qoe, test.qoe_scale), 1.0);
}

TEST(Fit, DeterministicWeightFiles) {
  SynthConfig sc;
  sc.n_contents = 2;
  sc.n_patterns = 2;
  sc.duration = 40;
  const auto corpus = gen_corpus(sc);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 5;
  const auto a = fit(corpus.traces, {2, 6, 3}, cfg);
  const auto b = fit(corpus.traces, {2, 6, 3}, cfg);
  EXPECT_EQ(io::to_json(a).dump(), io::to_json(b).dump());
  cfg.seed = 6;
  const auto c = fit(corpus.traces, {2, 6, 3}, cfg);
  EXPECT_NE(io::to_json(a).dump(), io::to_json(c).dump());
}

TEST(Fit, ZeroWindowStateAlsoTrains) {
  SynthConfig sc;
  sc.n_contents = 2;
  sc.n_patterns = 2;
  sc.duration = 40;
  const auto corpus = gen_corpus(sc);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.window_state = WindowState::zero;
  const auto m = fit(corpus.traces, {1, 5, 3}, cfg);
  EXPECT_LT(m.provenance.final_loss, m.provenance.initial_loss);
  EXPECT_EQ(m.provenance.loss_curve.size(), 5u);
}

TEST(Fit, EarlyStopOnPlateau) {
  std::vector<SessionTrace> train{constant_target_trace(30, 40.0, 1)};
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.patience = 3;
  cfg.min_delta = 1.0; // no epoch can improve this much
  const auto m = fit(train, {1, 2, 3}, cfg);
  EXPECT_EQ(m.provenance.epochs_run, 4u);
}

TEST(Fit, ErrorsAreReported) {
  TrainConfig cfg;
  EXPECT_THROW(fit(std::vector<SessionTrace>{}, {}, cfg), std::invalid_argument);
  std::vector<SessionTrace> shorty{constant_target_trace(3, 50.0, 1)};
  EXPECT_THROW(fit(shorty, {}, cfg), std::invalid_argument);
  auto no_truth = constant_target_trace(10, 50.0, 1);
  no_truth.qoe.reset();
  EXPECT_THROW(fit(std::vector<SessionTrace>{no_truth}, {}, cfg), std::invalid_argument);

  std::vector<SessionTrace> train{constant_target_trace(20, 50.0, 1)};
  cfg.epochs = 2;
  cfg.learning_rate = 1e300; // parameters overflow after the first step
  EXPECT_THROW(fit(train, {1, 3, 3}, cfg), TrainingError);
}

TEST(Predict, ClampedPureAndDimensionChecked) {
  std::vector<SessionTrace> train{constant_target_trace(30, 100.0, 1)};
  TrainConfig cfg;
  cfg.epochs = 30;
  auto model = fit(train, {1, 3, 3}, cfg);
  const auto y1 = predict(model, train[0]);
  EXPECT_EQ(y1, predict(model, train[0]));
  for (double v : y1) EXPECT_LE(v, 100.0);
  model.features = FeatureSet::parse("a");
  EXPECT_THROW(predict(model, train[0]), std::invalid_argument);
}

TEST(Predict, NormalizedTargetsRoundTrip) {
  auto tr = constant_target_trace(5, 0.0, 1);
  tr.qoe = std::vector<double>{1.0, 2.5, 3.3, 4.9, 5.0};
  tr.qoe_scale = {1.0, 5.0};
  NormSpec n;
  n.target = tr.qoe_scale;
  const auto y = normalized_targets(tr, n);
  for (std::size_t t = 0; t < y.size(); ++t) EXPECT_NEAR(n.denormalize_qoe(y[t]), (*tr.qoe)[t], 1e-9);
}

TEST(Fit, SubsetFeaturesSetInputWidth) {
  std::vector<SessionTrace> train{constant_target_trace(20, 50.0, 1)};
  TrainConfig cfg;
  cfg.epochs = 1;
  FitOptions opts;
  opts.features = FeatureSet::parse("e");
  const auto m = fit(train, {1, 3, 99}, cfg, opts);
  EXPECT_EQ(m.network.config().inputs, 2u);
  EXPECT_EQ(predict(m, train[0]).size(), 20u);
}

} // namespace
} // namespace qoe

// SPDX-License-Identifier: Apache-2.0
/**
 * @file   experiment.hpp
 * @brief  Train and evaluate across the folds of a split plan.
 *
 * Folds run on up to `jobs` worker threads. Results are stored by fold
 * index, so the merged output does not depend on scheduling.
 */
#pragma once

#include "datasets.hpp"
#include "metrics.hpp"
#include "training.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace qoe {

/// Run body(i) for i in [0, n) on up to `jobs` threads. If any call throws,
/// the exception of the lowest failing index is rethrown after all workers
/// finish.
template <class F> void parallel_for(std::size_t n, std::size_t jobs, F &&body) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto &t : pool) t.join();
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::string fold_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fold_%03zu", index);
  return buf;
}

/// "all", a single index, or a comma-separated list of indices.
/// Degenerate folds are dropped from "all" and rejected when named.
inline std::vector<std::size_t> select_folds(const SplitPlan &plan, const std::string &spec) {
  std::vector<std::size_t> out;
  if (spec == "all") {
    for (std::size_t i = 0; i < plan.folds.size(); ++i)
      if (!plan.folds[i].degenerate) out.push_back(i);
    return out;
  }
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t end = std::min(spec.find(',', start), spec.size());
    const std::string item = spec.substr(start, end - start);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (item.empty() || used != item.size())
      throw std::invalid_argument("fold must be 'all' or a comma-separated list of indices, got '" + spec + "'");
    if (v >= plan.folds.size())
      throw std::out_of_range("fold " + item + " out of range (plan has " + std::to_string(plan.folds.size()) +
                              " folds)");
    if (plan.folds[v].degenerate)
      throw std::invalid_argument("fold " + item + " is degenerate (empty training set)");
    out.push_back(static_cast<std::size_t>(v));
    start = end + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct ExperimentSpec {
  NetworkConfig net;
  TrainConfig train;
  FitOptions fit;
};

struct FoldModel {
  std::size_t fold = 0;
  TrainedModel model;
};

inline std::vector<SessionTrace> gather(const Corpus &corpus, const std::vector<std::string> &ids) {
  std::vector<SessionTrace> out;
  out.reserve(ids.size());
  for (const auto &id : ids) out.push_back(corpus.at(id));
  return out;
}

inline std::vector<FoldModel> train_folds(const Corpus &corpus, const SplitPlan &plan,
                                          const std::vector<std::size_t> &folds, const ExperimentSpec &spec,
                                          std::size_t jobs = 1) {
  std::vector<FoldModel> out(folds.size());
  parallel_for(folds.size(), jobs, [&](std::size_t k) {
    const std::size_t f = folds.at(k);
    const auto &fold = plan.folds.at(f);
    if (fold.degenerate) throw std::invalid_argument(fold_name(f) + ": degenerate fold");
    FitOptions opts = spec.fit;
    opts.corpus_name = corpus.name;
    opts.fold_name = fold_name(f);
    out[k] = {f, fit(gather(corpus, fold.train_ids), spec.net, spec.train, opts)};
  });
  return out;
}

struct VideoPrediction {
  std::string video_id;
  std::size_t fold = 0;
  std::vector<double> qoe_hat;
};

struct Evaluation {
  MetricsReport report;
  std::vector<VideoPrediction> predictions;
};

/// Predict every test video of every trained fold and score it against
/// ground truth. Pooled overall-QoE correlations are added when every
/// evaluated video carries an overall score.
inline Evaluation evaluate_folds(const Corpus &corpus, const SplitPlan &plan, const std::vector<FoldModel> &models,
                                 double or_delta, const std::string &label, std::size_t jobs = 1) {
  struct Item {
    std::size_t model;
    const SessionTrace *trace;
  };
  std::vector<Item> items;
  for (std::size_t k = 0; k < models.size(); ++k)
    for (const auto &id : plan.folds.at(models[k].fold).test_ids) items.push_back({k, &corpus.at(id)});

  Evaluation ev;
  ev.report.model = label;
  ev.report.or_delta = or_delta;
  if (!corpus.traces.empty()) ev.report.vqa_metric = corpus.traces.front().vqa_metric;
  ev.report.sessions.resize(items.size());
  ev.predictions.resize(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto &[k, trace] = items[i];
    if (!trace->qoe) throw std::invalid_argument("evaluate: video '" + trace->video_id + "' has no ground truth");
    auto y = predict(models[k].model, *trace);
    auto m = session_metrics(y, *trace->qoe, trace->qoe_scale, or_delta);
    m.video_id = trace->video_id;
    m.fold = models[k].fold;
    ev.report.sessions[i] = std::move(m);
    ev.predictions[i] = {trace->video_id, models[k].fold, std::move(y)};
  });
  ev.report.aggregate();

  const bool overall = !items.empty() && std::all_of(items.begin(), items.end(), [](const Item &it) {
    return it.trace->overall_qoe.has_value();
  });
  if (overall && items.size() >= 2) {
    std::vector<std::vector<double>> series;
    std::vector<double> truth;
    for (std::size_t i = 0; i < items.size(); ++i) {
      series.push_back(ev.predictions[i].qoe_hat);
      truth.push_back(*items[i].trace->overall_qoe);
    }
    ev.report.pooled_mean = pool_overall(series, truth, Pooling::mean);
    ev.report.pooled_median = pool_overall(series, truth, Pooling::median);
  }
  return ev;
}

} // namespace qoe

// SPDX-License-Identifier: Apache-2.0
/**
 * @file   training.hpp
 * @brief  Fit an LSTM to training traces and predict continuous QoE.
 *
 * Training uses stride-1 windows of `timestep` seconds, mean-squared error
 * on [0,1]-normalized QoE and Adam. By default each window starts from the
 * state the network carries at that second (refreshed once per epoch and
 * treated as a constant, i.e. BPTT truncated at `timestep`); WindowState::zero
 * restarts every window from zero state instead. Prediction runs the whole
 * trace statefully, one second at a time, from zero state.
 */
#pragma once

#include "features.hpp"
#include "lstm.hpp"
#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoe {

/// Initial state of each training window.
enum class WindowState {
  zero,    ///< every window starts from zero state
  carried, ///< the state the current network reaches at the window start
};

struct TrainConfig {
  std::size_t timestep = 4;
  WindowState window_state = WindowState::carried;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle = true;
  /// Stop once the epoch loss has not improved on its best by more than
  /// `min_delta` for this many epochs. 0 disables early stopping.
  std::size_t patience = 20;
  double min_delta = 0.0;

  void validate() const {
    if (timestep < 1) throw std::invalid_argument("TrainConfig: timestep must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
      throw std::invalid_argument("TrainConfig: Adam betas must lie in [0,1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
  }

  friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

class TrainingError : public std::runtime_error {
public:
  TrainingError(const std::string &what, std::size_t epoch, std::size_t batch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + ")"),
        epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

private:
  std::size_t epoch_, batch_;
};

struct Window {
  std::vector<Vector> x;
  std::vector<double> y;

  WindowView view() const { return {x, y}; }
};

/// Stride-1 windows of length `timestep`; there are T - timestep + 1.
inline std::vector<Window> make_windows(const FeatureSeries &series, std::span<const double> targets,
                                        std::size_t timestep, const std::string &trace_name = "") {
  if (timestep < 1) throw std::invalid_argument("make_windows: timestep must be >= 1");
  if (targets.size() != series.x.size())
    throw std::invalid_argument("make_windows: trace '" + trace_name +
                                "' has mismatched feature and target lengths");
  if (series.x.size() < timestep)
    throw std::invalid_argument("make_windows: trace '" + trace_name + "' is shorter (" +
                                std::to_string(series.x.size()) + " s) than timestep " +
                                std::to_string(timestep));
  std::vector<Window> out;
  out.reserve(series.x.size() - timestep + 1);
  for (std::size_t s = 0; s + timestep <= series.x.size(); ++s) {
    Window w;
    w.x.assign(series.x.begin() + static_cast<std::ptrdiff_t>(s),
               series.x.begin() + static_cast<std::ptrdiff_t>(s + timestep));
    w.y.assign(targets.begin() + static_cast<std::ptrdiff_t>(s),
               targets.begin() + static_cast<std::ptrdiff_t>(s + timestep));
    out.push_back(std::move(w));
  }
  return out;
}

struct Provenance {
  std::string corpus;
  std::string fold;
  std::vector<std::string> train_ids;
  TrainConfig config;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t epochs_run = 0;
  std::vector<double> loss_curve;
};

struct TrainedModel {
  LstmNetwork network;
  NormSpec norm;
  FeatureMode mode = FeatureMode::full;
  FeatureSet features = FeatureSet::all();
  Provenance provenance;
};

struct FitOptions {
  FeatureMode mode = FeatureMode::full;
  FeatureSet features = FeatureSet::all();
  NormOptions norm;
  std::string corpus_name;
  std::string fold_name;
};

class Adam {
public:
  Adam(const TrainConfig &cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t k = 0;
    for (std::size_t b = 0; b < params.size(); ++b) {
      auto p = params[b];
      auto g = grads[b];
      for (std::size_t i = 0; i < p.size(); ++i, ++k) {
        m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g[i];
        v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = m_[k] / c1;
        const double vhat = v_[k] / c2;
        p[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
  }

private:
  TrainConfig cfg_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

/// Normalized QoE targets of a trace under `norm`.
inline std::vector<double> normalized_targets(const SessionTrace &trace, const NormSpec &norm) {
  if (!trace.qoe) throw std::invalid_argument("trace '" + trace.video_id + "' has no ground-truth QoE");
  std::vector<double> y;
  y.reserve(trace.qoe->size());
  for (double q : *trace.qoe) y.push_back(norm.normalize_qoe(q));
  return y;
}

namespace detail {

struct TrainingTrace {
  std::vector<Vector> x;
  std::vector<double> y;
  std::vector<CellState> before; // state before consuming x[t]
};

struct WindowRef {
  std::size_t trace;
  std::size_t start;
};

class WindowSet {
public:
  WindowSet(std::vector<TrainingTrace> traces, std::size_t timestep, WindowState mode)
      : traces_(std::move(traces)), timestep_(timestep), mode_(mode) {
    for (std::size_t i = 0; i < traces_.size(); ++i)
      for (std::size_t s = 0; s + timestep_ <= traces_[i].x.size(); ++s) refs_.push_back({i, s});
  }

  std::size_t size() const noexcept { return refs_.size(); }

  /// Record the carried state at every second under the current weights.
  void refresh(const LstmNetwork &net) {
    if (mode_ != WindowState::carried) return;
    for (auto &tr : traces_) {
      CellState s = CellState::zero(net.config());
      tr.before.resize(tr.x.size());
      for (std::size_t t = 0; t < tr.x.size(); ++t) {
        tr.before[t] = s;
        net.advance(tr.x[t], s);
      }
    }
  }

  double accumulate(std::size_t i, const LstmNetwork &net, LstmNetwork &grads, double scale,
                    BpttWorkspace &ws) const {
    const auto &ref = refs_[i];
    const auto &tr = traces_[ref.trace];
    const WindowView view{std::span<const Vector>(tr.x).subspan(ref.start, timestep_),
                          std::span<const double>(tr.y).subspan(ref.start, timestep_)};
    const CellState *initial = mode_ == WindowState::carried ? &tr.before[ref.start] : nullptr;
    return accumulate_gradients(net, view, grads, scale, ws, initial);
  }

  double mean_loss(const LstmNetwork &net) {
    refresh(net);
    LstmNetwork scratch = LstmNetwork::zeros(net.config());
    BpttWorkspace ws;
    double total = 0.0;
    for (std::size_t i = 0; i < refs_.size(); ++i) total += accumulate(i, net, scratch, 0.0, ws);
    return total / static_cast<double>(refs_.size());
  }

private:
  std::vector<TrainingTrace> traces_;
  std::vector<WindowRef> refs_;
  std::size_t timestep_;
  WindowState mode_;
};

} // namespace detail

inline TrainedModel fit(std::span<const SessionTrace> training, NetworkConfig net_config,
                        const TrainConfig &cfg, const FitOptions &opts = {}) {
  cfg.validate();
  if (training.empty()) throw std::invalid_argument("fit: empty training fold");
  net_config.inputs = opts.features.size();
  net_config.validate();

  TrainedModel model;
  model.mode = opts.mode;
  model.features = opts.features;
  model.norm = derive_norm(training, opts.norm);

  std::vector<detail::TrainingTrace> prepared;
  for (const auto &trace : training) {
    auto series = featurize(trace, model.norm, opts.mode, opts.features);
    if (series.x.size() < cfg.timestep)
      throw std::invalid_argument("fit: trace '" + trace.video_id + "' is shorter (" +
                                  std::to_string(series.x.size()) + " s) than timestep " +
                                  std::to_string(cfg.timestep));
    prepared.push_back({std::move(series.x), normalized_targets(trace, model.norm), {}});
  }
  detail::WindowSet windows(std::move(prepared), cfg.timestep, cfg.window_state);

  const Rng root(cfg.seed);
  Rng init_rng = root.derive(1);
  Rng order_rng = root.derive(2);
  model.network = LstmNetwork::init(net_config, init_rng);
  LstmNetwork grads = LstmNetwork::zeros(net_config);
  const auto params = model.network.parameter_blocks();
  const auto gblocks = grads.parameter_blocks();
  Adam adam(cfg, model.network.parameter_count());
  BpttWorkspace ws;

  auto &prov = model.provenance;
  prov.corpus = opts.corpus_name;
  prov.fold = opts.fold_name;
  for (const auto &t : training) prov.train_ids.push_back(t.video_id);
  prov.config = cfg;
  prov.initial_loss = windows.mean_loss(model.network);

  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    windows.refresh(model.network);
    if (cfg.shuffle) shuffle(order, order_rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (auto g : gblocks) std::fill(g.begin(), g.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(end - start);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i)
        batch_loss += windows.accumulate(order[i], model.network, grads, scale, ws);
      if (!std::isfinite(batch_loss)) throw TrainingError("fit: non-finite loss", epoch, batch_index);
      epoch_loss += batch_loss;
      adam.step(params, gblocks);
    }
    epoch_loss /= static_cast<double>(windows.size());
    prov.loss_curve.push_back(epoch_loss);
    prov.epochs_run = epoch + 1;
    if (epoch_loss < best - cfg.min_delta) {
      best = epoch_loss;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  prov.final_loss = windows.mean_loss(model.network);
  if (!std::isfinite(prov.final_loss))
    throw TrainingError("fit: non-finite final loss", prov.epochs_run, 0);
  return model;
}

/// Normalized network output per second, before denormalization.
inline std::vector<double> predict_normalized(const TrainedModel &model, const SessionTrace &trace) {
  if (model.features.size() != model.network.config().inputs)
    throw std::invalid_argument("predict: model feature set has " + std::to_string(model.features.size()) +
                                " features but the network expects " +
                                std::to_string(model.network.config().inputs));
  const auto series = featurize(trace, model.norm, model.mode, model.features);
  return model.network.run_sequence(series.x).y;
}

/// Per-second QoE on the model's target scale, clamped to that scale.
inline std::vector<double> predict(const TrainedModel &model, const SessionTrace &trace) {
  auto y = predict_normalized(model, trace);
  for (double &v : y)
    v = std::clamp(model.norm.denormalize_qoe(v), model.norm.target.min, model.norm.target.max);
  return y;
}

} // namespace qoe

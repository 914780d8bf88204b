// SPDX-License-Identifier: Apache-2.0
/**
 * @file   lstm.hpp
 * @brief  Stacked four-gate LSTM (forget gate, no peepholes) with a linear
 *         scalar read-out, stateful sequence evaluation and exact BPTT.
 *
 * Per layer k with input u and previous hidden/cell (h', c'):
 *
 *   i = sigmoid(W_i u + U_i h' + b_i)     f = sigmoid(W_f u + U_f h' + b_f)
 *   g = tanh   (W_g u + U_g h' + b_g)     o = sigmoid(W_o u + U_o h' + b_o)
 *   c = f * c' + i * g                    h = o * tanh(c)
 *
 * and the prediction is y = w . h_top + b.
 */
#pragma once

#include "numerics.hpp"

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoe {

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCandidate = 2, kOutputGate = 3 };
inline constexpr std::size_t kGateCount = 4;
inline constexpr std::array<const char *, kGateCount> kGateNames = {"i", "f", "g", "o"};

struct NetworkConfig {
  std::size_t layers = 2;
  std::size_t units = 22;
  std::size_t inputs = 3;

  void validate() const {
    if (layers < 1 || units < 1 || inputs < 1)
      throw std::invalid_argument("NetworkConfig: layers, units and inputs must be >= 1 (got l=" +
                                  std::to_string(layers) + " d=" + std::to_string(units) +
                                  " m=" + std::to_string(inputs) + ")");
  }
  std::size_t layer_inputs(std::size_t k) const { return k == 0 ? inputs : units; }

  friend bool operator==(const NetworkConfig &, const NetworkConfig &) = default;
};

struct LstmLayerWeights {
  std::array<Matrix, kGateCount> W; // units x layer-input
  std::array<Matrix, kGateCount> U; // units x units
  std::array<Vector, kGateCount> b; // units

  std::size_t units() const noexcept { return W[0].rows(); }
  std::size_t inputs() const noexcept { return W[0].cols(); }

  friend bool operator==(const LstmLayerWeights &, const LstmLayerWeights &) = default;
};

struct OutputHead {
  Vector w;
  double b = 0.0;

  friend bool operator==(const OutputHead &, const OutputHead &) = default;
};

struct LayerState {
  Vector c;
  Vector h;

  friend bool operator==(const LayerState &, const LayerState &) = default;
};

struct CellState {
  std::vector<LayerState> layers;

  static CellState zero(const NetworkConfig &config) {
    CellState s;
    s.layers.assign(config.layers, LayerState{Vector(config.units, 0.0), Vector(config.units, 0.0)});
    return s;
  }

  friend bool operator==(const CellState &, const CellState &) = default;
};

struct StepResult {
  double y;
  CellState state;
};

struct SequenceResult {
  std::vector<double> y;
  CellState state;
};

/// One training window: inputs and normalized targets of equal length.
struct WindowView {
  std::span<const Vector> x;
  std::span<const double> y;
};

namespace detail {

/// Forward one layer. `gates` holds 4*d activations in gate order.
inline void forward_layer(const LstmLayerWeights &lw, const double *u, const double *h_prev,
                          const double *c_prev, double *gates, double *c, double *tanh_c,
                          double *h) noexcept {
  const std::size_t d = lw.units();
  for (std::size_t g = 0; g < kGateCount; ++g) {
    double *z = gates + g * d;
    for (std::size_t j = 0; j < d; ++j) z[j] = lw.b[g][j];
    matvec_add(lw.W[g], u, z);
    matvec_add(lw.U[g], h_prev, z);
    if (g == kCandidate)
      for (std::size_t j = 0; j < d; ++j) z[j] = qoe::tanh(z[j]);
    else
      for (std::size_t j = 0; j < d; ++j) z[j] = sigmoid(z[j]);
  }
  const double *ig = gates + kInputGate * d;
  const double *fg = gates + kForgetGate * d;
  const double *gg = gates + kCandidate * d;
  const double *og = gates + kOutputGate * d;
  for (std::size_t j = 0; j < d; ++j) {
    c[j] = fg[j] * c_prev[j] + ig[j] * gg[j];
    tanh_c[j] = qoe::tanh(c[j]);
    h[j] = og[j] * tanh_c[j];
  }
}

// Orthonormal rows from a Gaussian draw (Gram-Schmidt applied twice).
// Equivalent to the sign-corrected QR factor: every R diagonal is positive.
inline Matrix random_orthogonal(std::size_t n, Rng &rng) {
  Matrix a(n, n);
  for (double &v : a.values()) v = rng.normal();
  auto data = a.values();
  for (std::size_t i = 0; i < n; ++i) {
    double *qi = data.data() + i * n;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        const double *qj = data.data() + j * n;
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += qi[k] * qj[k];
        for (std::size_t k = 0; k < n; ++k) qi[k] -= dot * qj[k];
      }
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < n; ++k) norm += qi[k] * qi[k];
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < n; ++k) qi[k] /= norm;
  }
  return a;
}

inline void require_input(std::span<const double> x, std::size_t m) {
  if (x.size() != m)
    throw std::invalid_argument("LstmNetwork: input length " + std::to_string(x.size()) +
                                " != network input dimension " + std::to_string(m));
  if (!all_finite(x)) throw std::invalid_argument("LstmNetwork: non-finite input");
}

} // namespace detail

class LstmNetwork {
public:
  LstmNetwork() = default;

  /// All parameters zero. Also the shape used for gradient accumulators.
  static LstmNetwork zeros(const NetworkConfig &config) {
    config.validate();
    LstmNetwork net;
    net.config_ = config;
    net.layers_.resize(config.layers);
    for (std::size_t k = 0; k < config.layers; ++k) {
      auto &lw = net.layers_[k];
      for (std::size_t g = 0; g < kGateCount; ++g) {
        lw.W[g] = Matrix(config.units, config.layer_inputs(k));
        lw.U[g] = Matrix(config.units, config.units);
        lw.b[g] = Vector(config.units, 0.0);
      }
    }
    net.head_.w = Vector(config.units, 0.0);
    net.head_.b = 0.0;
    return net;
  }

  /// Glorot-uniform input kernels, orthogonal recurrent kernels, zero
  /// biases except the forget gate (ones). Head weights Glorot-uniform.
  static LstmNetwork init(const NetworkConfig &config, Rng &rng) {
    LstmNetwork net = zeros(config);
    const auto d = static_cast<double>(config.units);
    for (std::size_t k = 0; k < config.layers; ++k) {
      auto &lw = net.layers_[k];
      const double a = std::sqrt(6.0 / (static_cast<double>(config.layer_inputs(k)) + d));
      for (std::size_t g = 0; g < kGateCount; ++g) {
        for (double &v : lw.W[g].values()) v = rng.uniform(-a, a);
        lw.U[g] = detail::random_orthogonal(config.units, rng);
      }
      lw.b[kForgetGate].assign(config.units, 1.0);
    }
    const double a = std::sqrt(6.0 / (d + 1.0));
    for (double &v : net.head_.w) v = rng.uniform(-a, a);
    return net;
  }

  /// Assemble from explicit weights; validates every shape.
  static LstmNetwork from_parts(const NetworkConfig &config, std::vector<LstmLayerWeights> layers,
                                OutputHead head) {
    config.validate();
    if (layers.size() != config.layers)
      throw std::invalid_argument("LstmNetwork: expected " + std::to_string(config.layers) +
                                  " layers, got " + std::to_string(layers.size()));
    for (std::size_t k = 0; k < layers.size(); ++k) {
      for (std::size_t g = 0; g < kGateCount; ++g) {
        const auto &lw = layers[k];
        const std::string where = "layer " + std::to_string(k) + " gate " + kGateNames[g];
        if (lw.W[g].rows() != config.units || lw.W[g].cols() != config.layer_inputs(k))
          throw std::invalid_argument("LstmNetwork: " + where + " W has shape " +
                                      lw.W[g].shape());
        if (lw.U[g].rows() != config.units || lw.U[g].cols() != config.units)
          throw std::invalid_argument("LstmNetwork: " + where + " U has shape " +
                                      lw.U[g].shape());
        if (lw.b[g].size() != config.units)
          throw std::invalid_argument("LstmNetwork: " + where + " bias has length " +
                                      std::to_string(lw.b[g].size()));
        if (!all_finite(lw.W[g].values()) || !all_finite(lw.U[g].values()) ||
            !all_finite(lw.b[g]))
          throw std::invalid_argument("LstmNetwork: " + where + " has non-finite values");
      }
    }
    if (head.w.size() != config.units || !all_finite(head.w) || !std::isfinite(head.b))
      throw std::invalid_argument("LstmNetwork: output head shape or values invalid");
    LstmNetwork net;
    net.config_ = config;
    net.layers_ = std::move(layers);
    net.head_ = std::move(head);
    return net;
  }

  const NetworkConfig &config() const noexcept { return config_; }
  const std::vector<LstmLayerWeights> &layers() const noexcept { return layers_; }
  std::vector<LstmLayerWeights> &layers() noexcept { return layers_; }
  const OutputHead &head() const noexcept { return head_; }
  OutputHead &head() noexcept { return head_; }

  /// 4d(in + d + 1) per layer plus d + 1 for the head.
  std::size_t parameter_count() const noexcept {
    std::size_t n = head_.w.size() + 1;
    for (const auto &lw : layers_)
      for (std::size_t g = 0; g < kGateCount; ++g)
        n += lw.W[g].size() + lw.U[g].size() + lw.b[g].size();
    return n;
  }

  /// Every parameter tensor as a flat mutable view, in a fixed order:
  /// per layer, per gate (i, f, g, o): W, U, b; then head w, head b.
  std::vector<std::span<double>> parameter_blocks() {
    std::vector<std::span<double>> blocks;
    for (auto &lw : layers_)
      for (std::size_t g = 0; g < kGateCount; ++g) {
        blocks.emplace_back(lw.W[g].values());
        blocks.emplace_back(lw.U[g].values());
        blocks.emplace_back(lw.b[g]);
      }
    blocks.emplace_back(head_.w);
    blocks.emplace_back(&head_.b, 1);
    return blocks;
  }

  std::vector<std::span<const double>> parameter_blocks() const {
    std::vector<std::span<const double>> out;
    for (auto s : const_cast<LstmNetwork *>(this)->parameter_blocks()) out.emplace_back(s);
    return out;
  }

  /// Advance `state` in place by one input and return the prediction.
  double advance(std::span<const double> x, CellState &state) const {
    detail::require_input(x, config_.inputs);
    const std::size_t d = config_.units;
    if (state.layers.size() != config_.layers)
      throw std::invalid_argument("LstmNetwork: state has wrong layer count");
    thread_local std::vector<double> scratch;
    scratch.resize(kGateCount * d + 3 * d);
    double *gates = scratch.data();
    double *c = gates + kGateCount * d;
    double *tc = c + d;
    double *h = tc + d;
    const double *u = x.data();
    for (std::size_t k = 0; k < config_.layers; ++k) {
      auto &ls = state.layers[k];
      detail::forward_layer(layers_[k], u, ls.h.data(), ls.c.data(), gates, c, tc, h);
      std::copy(c, c + d, ls.c.begin());
      std::copy(h, h + d, ls.h.begin());
      u = ls.h.data();
    }
    double y = head_.b;
    for (std::size_t j = 0; j < d; ++j) y += head_.w[j] * u[j];
    return y;
  }

  StepResult step(std::span<const double> x, const CellState &state) const {
    StepResult r{0.0, state};
    r.y = advance(x, r.state);
    return r;
  }

  /// Fold `step` over `xs`, carrying state; zero initial state by default.
  SequenceResult run_sequence(std::span<const Vector> xs,
                              const std::optional<CellState> &initial = std::nullopt) const {
    if (xs.empty()) throw std::invalid_argument("run_sequence: empty input series");
    SequenceResult r{{}, initial ? *initial : CellState::zero(config_)};
    r.y.reserve(xs.size());
    for (const auto &x : xs) r.y.push_back(advance(x, r.state));
    return r;
  }

  friend bool operator==(const LstmNetwork &, const LstmNetwork &) = default;

private:
  NetworkConfig config_;
  std::vector<LstmLayerWeights> layers_;
  OutputHead head_;
};

/// Reusable buffers for BPTT over windows of bounded length.
class BpttWorkspace {
public:
  void prepare(const NetworkConfig &config, std::size_t steps) {
    const std::size_t d = config.units, L = config.layers;
    d_ = d;
    L_ = L;
    const std::size_t cells = steps * L * d;
    gates_.assign(cells * kGateCount, 0.0);
    c_.assign(cells, 0.0);
    tc_.assign(cells, 0.0);
    h_.assign(cells, 0.0);
    y_.assign(steps, 0.0);
    zero_.assign(d, 0.0);
    dh_.assign(L * d, 0.0);
    dc_.assign(L * d, 0.0);
    dz_.assign(kGateCount * d, 0.0);
    du_.assign(d, 0.0);
    dh_below_.assign(d, 0.0);
  }

  double *gates(std::size_t t, std::size_t k) { return gates_.data() + (t * L_ + k) * kGateCount * d_; }
  double *c(std::size_t t, std::size_t k) { return c_.data() + (t * L_ + k) * d_; }
  double *tc(std::size_t t, std::size_t k) { return tc_.data() + (t * L_ + k) * d_; }
  double *h(std::size_t t, std::size_t k) { return h_.data() + (t * L_ + k) * d_; }

  std::vector<double> gates_, c_, tc_, h_, y_, zero_, dh_, dc_, dz_, du_, dh_below_;

private:
  std::size_t d_ = 0, L_ = 0;
};

/// Loss = mean over the window of (y_hat - y)^2, starting from `initial`
/// (zero state when null). Adds `scale` * dLoss/dtheta into `grads` (same
/// shape as `net`) and returns the window loss. The initial state is a
/// constant: no gradient flows back through it.
inline double accumulate_gradients(const LstmNetwork &net, WindowView window, LstmNetwork &grads,
                                   double scale, BpttWorkspace &ws,
                                   const CellState *initial = nullptr) {
  const auto &cfg = net.config();
  const std::size_t T = window.x.size();
  if (T == 0 || window.y.size() != T)
    throw std::invalid_argument("backward: window inputs and targets must be nonempty and equal length");
  for (double y : window.y)
    if (!std::isfinite(y)) throw std::invalid_argument("backward: non-finite target");
  const std::size_t d = cfg.units, L = cfg.layers;
  if (initial && initial->layers.size() != L)
    throw std::invalid_argument("backward: initial state has wrong layer count");
  ws.prepare(cfg, T);
  auto h0 = [&](std::size_t k) { return initial ? initial->layers[k].h.data() : ws.zero_.data(); };
  auto c0 = [&](std::size_t k) { return initial ? initial->layers[k].c.data() : ws.zero_.data(); };

  // Forward with caches.
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    detail::require_input(window.x[t], cfg.inputs);
    const double *u = window.x[t].data();
    for (std::size_t k = 0; k < L; ++k) {
      const double *h_prev = t == 0 ? h0(k) : ws.h(t - 1, k);
      const double *c_prev = t == 0 ? c0(k) : ws.c(t - 1, k);
      detail::forward_layer(net.layers()[k], u, h_prev, c_prev, ws.gates(t, k), ws.c(t, k),
                            ws.tc(t, k), ws.h(t, k));
      u = ws.h(t, k);
    }
    double y = net.head().b;
    for (std::size_t j = 0; j < d; ++j) y += net.head().w[j] * u[j];
    ws.y_[t] = y;
    const double e = y - window.y[t];
    loss += e * e;
  }
  loss /= static_cast<double>(T);

  // Backward.
  std::fill(ws.dh_.begin(), ws.dh_.end(), 0.0);
  std::fill(ws.dc_.begin(), ws.dc_.end(), 0.0);
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t t = T; t-- > 0;) {
    const double dy = 2.0 * (ws.y_[t] - window.y[t]) * inv_t * scale;
    const double *h_top = ws.h(t, L - 1);
    for (std::size_t j = 0; j < d; ++j) {
      grads.head().w[j] += dy * h_top[j];
      ws.dh_below_[j] = dy * net.head().w[j];
    }
    grads.head().b += dy;

    for (std::size_t k = L; k-- > 0;) {
      const auto &lw = net.layers()[k];
      auto &gw = grads.layers()[k];
      double *dh = ws.dh_.data() + k * d;
      double *dc = ws.dc_.data() + k * d;
      const double *gates = ws.gates(t, k);
      const double *ig = gates + kInputGate * d;
      const double *fg = gates + kForgetGate * d;
      const double *gg = gates + kCandidate * d;
      const double *og = gates + kOutputGate * d;
      const double *tc = ws.tc(t, k);
      const double *c_prev = t == 0 ? c0(k) : ws.c(t - 1, k);
      const double *h_prev = t == 0 ? h0(k) : ws.h(t - 1, k);
      const bool has_prev = t > 0 || initial != nullptr;
      const double *u = k == 0 ? window.x[t].data() : ws.h(t, k - 1);
      double *dz_i = ws.dz_.data() + kInputGate * d;
      double *dz_f = ws.dz_.data() + kForgetGate * d;
      double *dz_g = ws.dz_.data() + kCandidate * d;
      double *dz_o = ws.dz_.data() + kOutputGate * d;

      for (std::size_t j = 0; j < d; ++j) {
        const double dhj = dh[j] + ws.dh_below_[j];
        const double dcj = dc[j] + dhj * og[j] * (1.0 - tc[j] * tc[j]);
        dz_o[j] = dhj * tc[j] * og[j] * (1.0 - og[j]);
        dz_i[j] = dcj * gg[j] * ig[j] * (1.0 - ig[j]);
        dz_g[j] = dcj * ig[j] * (1.0 - gg[j] * gg[j]);
        dz_f[j] = dcj * c_prev[j] * fg[j] * (1.0 - fg[j]);
        dc[j] = dcj * fg[j]; // flows to t-1
      }
      std::fill(dh, dh + d, 0.0);
      if (k > 0) std::fill(ws.du_.begin(), ws.du_.end(), 0.0);
      for (std::size_t g = 0; g < kGateCount; ++g) {
        const double *dz = ws.dz_.data() + g * d;
        outer_add(gw.W[g], dz, u);
        if (has_prev) outer_add(gw.U[g], dz, h_prev);
        for (std::size_t j = 0; j < d; ++j) gw.b[g][j] += dz[j];
        if (t > 0) matvec_transpose_add(lw.U[g], dz, dh);
        if (k > 0) matvec_transpose_add(lw.W[g], dz, ws.du_.data());
      }
      if (k > 0) std::copy(ws.du_.begin(), ws.du_.end(), ws.dh_below_.begin());
    }
  }
  return loss;
}

struct BackwardResult {
  LstmNetwork gradients;
  double loss;
};

/// Exact BPTT gradients of the window loss with respect to every parameter.
inline BackwardResult backward(const LstmNetwork &net, WindowView window,
                               const CellState *initial = nullptr) {
  BackwardResult r{LstmNetwork::zeros(net.config()), 0.0};
  BpttWorkspace ws;
  r.loss = accumulate_gradients(net, window, r.gradients, 1.0, ws, initial);
  return r;
}

} // namespace qoe

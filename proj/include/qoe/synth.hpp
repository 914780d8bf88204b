// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synth.hpp
 * @brief  Synthetic streaming sessions with a known, non-Markovian QoE
 *         process, for checking the pipeline without subjective databases.
 *
 * Ground truth on [0, 100], with s(t) the normalized STSQ:
 *
 *   q(0) = 100 s(0)
 *   stalled:  q(t) = max(0, q(t-1) - beta)
 *   playing:  q(t) = q(t-1) + damp(t) (1 - alpha) (100 min_{t-K < u <= t} s(u) - q(t-1))
 *
 * where damp(t) = rho during the K seconds after a stall ends and 1
 * otherwise. The min over a K-deep window makes q depend on more than
 * (q(t-1), x(t)).
 */
#pragma once

#include "datasets.hpp"
#include "features.hpp"
#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoe {

struct OracleParams {
  double alpha = 0.7;  ///< smoothing, in (0, 1)
  double beta = 4.0;   ///< QoE drop per stalled second, > 0
  std::size_t memory = 5; ///< min-pool depth K, >= 1
  double rho = 0.5;    ///< post-stall damping, in (0, 1]

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("oracle: alpha must lie in (0,1)");
    if (!(beta > 0.0)) throw std::invalid_argument("oracle: beta must be > 0");
    if (memory < 1) throw std::invalid_argument("oracle: memory K must be >= 1");
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("oracle: rho must lie in (0,1]");
  }
};

struct SynthConfig {
  std::size_t n_contents = 14;
  std::size_t n_patterns = 8;
  std::size_t duration = 120;

  // STSQ process: piecewise-constant levels, a per-content offset, and
  // per-second jitter; clamped to [0, 1].
  std::vector<double> levels{0.3, 0.5, 0.7, 0.9};
  double switch_period = 6.0; ///< mean segment length, seconds
  double content_offset = 0.08;
  double jitter = 0.02;

  // Pattern j carries j % (max_stalls + 1) stalls.
  std::size_t max_stalls = 3;
  std::size_t stall_min = 2;
  std::size_t stall_max = 8;

  OracleParams oracle;
  std::uint64_t seed = 1;

  void validate() const {
    oracle.validate();
    if (n_contents < 1 || n_patterns < 1) throw std::invalid_argument("synth: need >= 1 content and pattern");
    if (duration < 2) throw std::invalid_argument("synth: duration must be >= 2 s");
    if (levels.empty()) throw std::invalid_argument("synth: no STSQ levels");
    if (!(switch_period >= 1.0)) throw std::invalid_argument("synth: switch_period must be >= 1");
    if (stall_min < 1 || stall_max < stall_min) throw std::invalid_argument("synth: bad stall durations");
  }
};

/// Ground-truth QoE for normalized STSQ `s` and playback flags.
inline std::vector<double> oracle_qoe(std::span<const double> s, std::span<const std::uint8_t> playing,
                                      const OracleParams &p) {
  p.validate();
  if (s.empty() || s.size() != playing.size())
    throw std::invalid_argument("oracle_qoe: series must be nonempty and of equal length");
  std::vector<double> q(s.size());
  q[0] = std::clamp(100.0 * s[0], 0.0, 100.0);
  std::optional<std::size_t> last_stall;
  if (!playing[0]) last_stall = 0;
  for (std::size_t t = 1; t < s.size(); ++t) {
    if (!playing[t]) {
      last_stall = t;
      q[t] = std::max(0.0, q[t - 1] - p.beta);
      continue;
    }
    const std::size_t from = t + 1 >= p.memory ? t + 1 - p.memory : 0;
    double m = s[from];
    for (std::size_t u = from + 1; u <= t; ++u) m = std::min(m, s[u]);
    const double target = 100.0 * std::clamp(m, 0.0, 1.0);
    double step = (1.0 - p.alpha) * (target - q[t - 1]);
    if (last_stall && t - *last_stall <= p.memory) step *= p.rho;
    q[t] = std::clamp(q[t - 1] + step, 0.0, 100.0);
  }
  return q;
}

inline std::string synth_video_id(std::size_t content, std::size_t pattern) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "c%02zu_p%02zu", content, pattern);
  return buf;
}

/// Stall schedule of one pattern: (start, length) pairs, sorted, disjoint,
/// never covering t = 0 or the final second.
inline std::vector<std::pair<std::size_t, std::size_t>> synth_stalls(const SynthConfig &cfg,
                                                                    std::size_t pattern) {
  Rng rng = Rng(cfg.seed).derive(0x51a11 + pattern);
  const std::size_t count = pattern % (cfg.max_stalls + 1);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (count == 0 || cfg.duration < 4) return out;
  const std::size_t margin = std::min<std::size_t>(10, cfg.duration / 4);
  const std::size_t usable = cfg.duration - 2 * margin;
  const std::size_t slot = std::max<std::size_t>(1, usable / count);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t len = cfg.stall_min + static_cast<std::size_t>(rng.below(cfg.stall_max - cfg.stall_min + 1));
    len = std::min(len, std::max<std::size_t>(1, slot - 1));
    const std::size_t room = slot > len ? slot - len : 1;
    const std::size_t start = margin + k * slot + static_cast<std::size_t>(rng.below(room));
    if (start + len >= cfg.duration) break;
    out.emplace_back(start, len);
  }
  return out;
}

inline SessionTrace gen_trace(const SynthConfig &cfg, std::size_t content, std::size_t pattern) {
  cfg.validate();
  if (content >= cfg.n_contents || pattern >= cfg.n_patterns)
    throw std::out_of_range("gen_trace: content/pattern index out of range");
  const Rng root(cfg.seed);
  const std::size_t T = cfg.duration;

  // Quality switching schedule belongs to the pattern.
  Rng prng = root.derive(0x9a77 + pattern);
  std::vector<double> level(T);
  std::size_t idx = static_cast<std::size_t>(prng.below(cfg.levels.size()));
  const auto lo_len = static_cast<std::size_t>(std::max(1.0, std::ceil(cfg.switch_period / 2)));
  const auto hi_len = static_cast<std::size_t>(std::max<double>(lo_len, std::floor(1.5 * cfg.switch_period)));
  for (std::size_t t = 0; t < T;) {
    const std::size_t len = lo_len + static_cast<std::size_t>(prng.below(hi_len - lo_len + 1));
    for (std::size_t u = t; u < std::min(T, t + len); ++u) level[u] = cfg.levels[idx];
    t += len;
    if (cfg.levels.size() > 1) {
      const std::size_t jump = 1 + static_cast<std::size_t>(prng.below(cfg.levels.size() - 1));
      idx = (idx + jump) % cfg.levels.size();
    }
  }

  Rng crng = root.derive(0xc0de + content);
  const double offset = crng.uniform(-cfg.content_offset, cfg.content_offset);
  Rng vrng = root.derive(0xf00d + content * cfg.n_patterns + pattern);

  SessionTrace tr;
  tr.video_id = synth_video_id(content, pattern);
  char buf[24];
  std::snprintf(buf, sizeof buf, "c%02zu", content);
  tr.content_id = buf;
  std::snprintf(buf, sizeof buf, "p%02zu", pattern);
  tr.pattern_id = buf;
  tr.vqa_metric = "synthetic";
  tr.vqa_range = std::array<double, 2>{0.0, 1.0};
  tr.orientation = Orientation::higher_better;
  tr.qoe_scale = {0.0, 100.0};
  tr.playing.assign(T, 1);
  for (auto [start, len] : synth_stalls(cfg, pattern))
    for (std::size_t u = start; u < std::min(T, start + len); ++u) tr.playing[u] = 0;

  tr.stsq.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double noise = cfg.jitter * vrng.normal();
    if (t > 0 && !tr.playing[t]) tr.stsq[t] = tr.stsq[t - 1]; // frozen frame
    else tr.stsq[t] = std::clamp(level[t] + offset + noise, 0.0, 1.0);
  }
  tr.qoe = oracle_qoe(tr.stsq, tr.playing, cfg.oracle);
  double sum = 0.0;
  for (double q : *tr.qoe) sum += q;
  tr.overall_qoe = sum / static_cast<double>(T);
  return tr;
}

inline Corpus gen_corpus(const SynthConfig &cfg, std::string name = "synthetic") {
  Corpus c;
  c.name = std::move(name);
  for (std::size_t i = 0; i < cfg.n_contents; ++i)
    for (std::size_t j = 0; j < cfg.n_patterns; ++j) c.traces.push_back(gen_trace(cfg, i, j));
  return c;
}

} // namespace qoe

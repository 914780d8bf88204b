// SPDX-License-Identifier: Apache-2.0
/**
 * @file   features.hpp
 * @brief  Session traces and the per-second network input
 *         x(t) = [STSQ(t), PI(t), T_R(t)] with its affine normalization.
 */
#pragma once

#include "numerics.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoe {

struct QoeScale {
  double min = 0.0;
  double max = 100.0;

  double range() const noexcept { return max - min; }
  friend bool operator==(const QoeScale &, const QoeScale &) = default;
};

/// Whether a larger VQA score means better quality (MS-SSIM) or worse
/// (STRRED, NIQE).
enum class Orientation { higher_better, lower_better };

struct SessionTrace {
  std::string video_id;
  std::string content_id;
  std::string pattern_id;
  std::vector<double> stsq;
  std::vector<std::uint8_t> playing; // 1 playing, 0 rebuffering
  std::optional<std::vector<double>> qoe;
  QoeScale qoe_scale;
  std::string vqa_metric;
  std::optional<std::array<double, 2>> vqa_range;
  Orientation orientation = Orientation::higher_better;
  std::optional<double> overall_qoe;

  std::size_t duration() const noexcept { return stsq.size(); }

  void validate() const {
    const std::string who = "trace '" + video_id + "': ";
    if (stsq.empty()) throw std::invalid_argument(who + "empty");
    if (playing.size() != stsq.size())
      throw std::invalid_argument(who + "playing length differs from stsq length");
    if (qoe && qoe->size() != stsq.size())
      throw std::invalid_argument(who + "qoe length differs from stsq length");
    if (!all_finite(stsq)) throw std::invalid_argument(who + "non-finite stsq");
    if (qoe && !all_finite(*qoe)) throw std::invalid_argument(who + "non-finite qoe");
    if (!(qoe_scale.min < qoe_scale.max))
      throw std::invalid_argument(who + "qoe_scale.min must be < qoe_scale.max");
    for (auto p : playing)
      if (p > 1) throw std::invalid_argument(who + "playing must be 0 or 1");
  }

  friend bool operator==(const SessionTrace &, const SessionTrace &) = default;
};

/// How T_R is defined before the first stall of a session.
enum class TrBeforeStall {
  session_start, ///< seconds since session start (t + 1)
  constant_max,  ///< pinned at T_max
};

/// Feature selection for ablations. Bit 0 STSQ, bit 1 PI, bit 2 T_R.
class FeatureSet {
public:
  static constexpr unsigned kStsq = 1, kPi = 2, kTr = 4;

  constexpr FeatureSet() = default;
  constexpr explicit FeatureSet(unsigned bits) : bits_(bits) {}
  static constexpr FeatureSet all() { return FeatureSet(kStsq | kPi | kTr); }

  /// Subsets named as in the feature ablation: a STSQ, b PI, c T_R,
  /// d STSQ+PI, e PI+T_R, f STSQ+T_R, g STSQ+PI+T_R. Also accepts
  /// "+"-joined names such as "stsq+tr".
  static FeatureSet parse(const std::string &text) {
    static constexpr std::array<unsigned, 7> letters = {
        kStsq, kPi, kTr, kStsq | kPi, kPi | kTr, kStsq | kTr, kStsq | kPi | kTr};
    if (text.size() == 1 && text[0] >= 'a' && text[0] <= 'g')
      return FeatureSet(letters[static_cast<std::size_t>(text[0] - 'a')]);
    unsigned bits = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t end = std::min(text.find('+', start), text.size());
      const std::string name = text.substr(start, end - start);
      if (name == "stsq") bits |= kStsq;
      else if (name == "pi") bits |= kPi;
      else if (name == "tr") bits |= kTr;
      else throw std::invalid_argument("unknown feature '" + name + "' in '" + text + "'");
      start = end + 1;
    }
    return FeatureSet(bits);
  }

  static constexpr std::array<char, 7> kLetters = {'a', 'b', 'c', 'd', 'e', 'f', 'g'};

  char letter() const {
    for (char c : kLetters)
      if (parse(std::string(1, c)) == *this) return c;
    return '?';
  }

  std::string name() const {
    std::string s;
    auto add = [&](const char *n) { s += (s.empty() ? "" : "+") + std::string(n); };
    if (has(kStsq)) add("stsq");
    if (has(kPi)) add("pi");
    if (has(kTr)) add("tr");
    return s;
  }

  constexpr bool has(unsigned bit) const { return (bits_ & bit) != 0; }
  constexpr unsigned bits() const { return bits_; }
  constexpr std::size_t size() const {
    return (has(kStsq) ? 1u : 0u) + (has(kPi) ? 1u : 0u) + (has(kTr) ? 1u : 0u);
  }

  friend constexpr bool operator==(FeatureSet, FeatureSet) = default;

private:
  unsigned bits_ = kStsq | kPi | kTr;
};

enum class FeatureMode {
  full,      ///< STSQ, PI and T_R from the trace
  stsq_only, ///< PI pinned to 1, T_R a stall-free ramp
};

/// Affine maps fitted on a training fold.
struct NormSpec {
  double stsq_lo = 0.0;
  double stsq_hi = 1.0;
  Orientation orientation = Orientation::higher_better;
  double tr_max = 1.0; // longest training session, seconds
  TrBeforeStall tr_mode = TrBeforeStall::session_start;
  QoeScale target{0.0, 100.0};

  double normalize_stsq(double v) const {
    const double n = (v - stsq_lo) / (stsq_hi - stsq_lo);
    return orientation == Orientation::higher_better ? n : 1.0 - n;
  }
  double denormalize_stsq(double n) const {
    const double a = orientation == Orientation::higher_better ? n : 1.0 - n;
    return stsq_lo + a * (stsq_hi - stsq_lo);
  }
  double normalize_qoe(double q) const { return (q - target.min) / target.range(); }
  double denormalize_qoe(double n) const { return target.min + n * target.range(); }

  void validate() const {
    if (!(stsq_hi != stsq_lo) || !std::isfinite(stsq_hi - stsq_lo))
      throw std::invalid_argument("NormSpec: degenerate STSQ range (hi == lo)");
    if (!(tr_max > 0.0)) throw std::invalid_argument("NormSpec: tr_max must be > 0");
    if (!(target.min < target.max))
      throw std::invalid_argument("NormSpec: degenerate QoE target range");
  }

  friend bool operator==(const NormSpec &, const NormSpec &) = default;
};

struct FeatureSeries {
  std::vector<Vector> x;
  NormSpec norm;
  FeatureSet features;
};

/// Seconds since the most recent rebuffering second; 0 while stalled.
/// Before the first stall: t + 1 (session_start) or `tr_max` (constant_max).
inline std::vector<double> compute_tr(std::span<const std::uint8_t> playing,
                                      TrBeforeStall mode = TrBeforeStall::session_start,
                                      double tr_max = 0.0) {
  if (playing.empty()) throw std::invalid_argument("compute_tr: empty series");
  std::vector<double> tr(playing.size());
  std::optional<std::size_t> last_stall;
  for (std::size_t t = 0; t < playing.size(); ++t) {
    if (!playing[t]) {
      last_stall = t;
      tr[t] = 0.0;
    } else if (last_stall) {
      tr[t] = static_cast<double>(t - *last_stall);
    } else {
      tr[t] = mode == TrBeforeStall::session_start ? static_cast<double>(t + 1) : tr_max;
    }
  }
  return tr;
}

inline std::vector<double> compute_pi(std::span<const std::uint8_t> playing) {
  std::vector<double> pi(playing.size());
  for (std::size_t t = 0; t < playing.size(); ++t) pi[t] = playing[t] ? 1.0 : 0.0;
  return pi;
}

/// Options for deriving a NormSpec from training traces.
struct NormOptions {
  TrBeforeStall tr_mode = TrBeforeStall::session_start;
  /// Overrides any range declared in the traces.
  std::optional<std::array<double, 2>> stsq_range;
};

/// Fit normalization on training traces only. STSQ range comes from the
/// declared VQA range when present, otherwise min/max over `training`.
inline NormSpec derive_norm(std::span<const SessionTrace> training, const NormOptions &opts = {}) {
  if (training.empty()) throw std::invalid_argument("derive_norm: no training traces");
  NormSpec spec;
  spec.tr_mode = opts.tr_mode;
  spec.orientation = training.front().orientation;
  std::optional<std::array<double, 2>> declared = opts.stsq_range;
  if (!declared) declared = training.front().vqa_range;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double tmax = 0.0;
  QoeScale target = training.front().qoe_scale;
  for (const auto &tr : training) {
    tr.validate();
    if (tr.orientation != spec.orientation)
      throw std::invalid_argument("derive_norm: mixed VQA orientations in training set");
    for (double v : tr.stsq) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    tmax = std::max(tmax, static_cast<double>(tr.duration()));
    target.min = std::min(target.min, tr.qoe_scale.min);
    target.max = std::max(target.max, tr.qoe_scale.max);
  }
  if (declared) {
    lo = (*declared)[0];
    hi = (*declared)[1];
  }
  spec.stsq_lo = lo;
  spec.stsq_hi = hi;
  spec.tr_max = tmax;
  spec.target = target;
  spec.validate();
  return spec;
}

/// Per-second features under `norm`: [stsq_norm, pi, tr_norm] restricted
/// to `features`, in that column order.
inline FeatureSeries featurize(const SessionTrace &trace, const NormSpec &norm,
                               FeatureMode mode = FeatureMode::full,
                               FeatureSet features = FeatureSet::all()) {
  trace.validate();
  norm.validate();
  if (features.size() == 0) throw std::invalid_argument("featurize: empty feature set");
  const std::size_t T = trace.duration();
  std::vector<std::uint8_t> playing = trace.playing;
  if (mode == FeatureMode::stsq_only) playing.assign(T, 1);
  const auto pi = compute_pi(playing);
  const auto tr = compute_tr(playing, norm.tr_mode, norm.tr_max);

  FeatureSeries out;
  out.norm = norm;
  out.features = features;
  out.x.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Vector x;
    x.reserve(features.size());
    if (features.has(FeatureSet::kStsq)) x.push_back(norm.normalize_stsq(trace.stsq[t]));
    if (features.has(FeatureSet::kPi)) x.push_back(pi[t]);
    if (features.has(FeatureSet::kTr)) x.push_back(tr[t] / norm.tr_max);
    out.x.push_back(std::move(x));
  }
  return out;
}

} // namespace qoe

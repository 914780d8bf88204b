// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.hpp
 * @brief  LCC, SROCC, normalized RMSE, outage rate, overall-QoE pooling and
 *         fold aggregation.
 *
 * Outage rate counts the seconds whose absolute error exceeds a fixed
 * fraction of the QoE scale range (default 10%). The fraction is carried in
 * every report.
 */
#pragma once

#include "features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoe {

/// A correlation that may be undefined (constant input).
struct Correlation {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string undefined_reason;

  bool defined() const noexcept { return undefined_reason.empty(); }
};

namespace detail {

inline void require_pair(std::span<const double> a, std::span<const double> b, const char *what) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": series lengths differ (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  if (a.size() < 2) throw std::invalid_argument(std::string(what) + ": need at least 2 samples");
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

} // namespace detail

inline Correlation lcc(std::span<const double> a, std::span<const double> b) {
  detail::require_pair(a, b, "lcc");
  const double ma = detail::mean(a), mb = detail::mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return {std::numeric_limits<double>::quiet_NaN(), "constant series"};
  const double r = sab / std::sqrt(saa * sbb);
  return {std::clamp(r, -1.0, 1.0), {}};
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
inline std::vector<double> fractional_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t end = start + 1;
    while (end < idx.size() && v[idx[end]] == v[idx[start]]) ++end;
    const double r = 0.5 * static_cast<double>(start + 1 + end); // mean of start+1 .. end
    for (std::size_t k = start; k < end; ++k) ranks[idx[k]] = r;
    start = end;
  }
  return ranks;
}

inline Correlation srocc(std::span<const double> a, std::span<const double> b) {
  detail::require_pair(a, b, "srocc");
  const auto ra = fractional_ranks(a);
  const auto rb = fractional_ranks(b);
  return lcc(ra, rb);
}

/// 100 * RMSE / (scale.max - scale.min)
inline double rmse_n(std::span<const double> pred, std::span<const double> truth, QoeScale scale) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("rmse_n: series must be nonempty and of equal length");
  if (!(scale.min < scale.max)) throw std::invalid_argument("rmse_n: degenerate scale");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return 100.0 * std::sqrt(s / static_cast<double>(pred.size())) / scale.range();
}

inline double outage_rate(std::span<const double> pred, std::span<const double> truth, QoeScale scale,
                          double delta_fraction = 0.10) {
  if (!(delta_fraction > 0.0))
    throw std::invalid_argument("outage_rate: delta_fraction must be > 0");
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("outage_rate: series must be nonempty and of equal length");
  const double threshold = delta_fraction * scale.range();
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (std::abs(pred[i] - truth[i]) > threshold) ++count;
  return 100.0 * static_cast<double>(count) / static_cast<double>(pred.size());
}

enum class Pooling { mean, median };

inline Pooling parse_pooling(const std::string &s) {
  if (s == "mean") return Pooling::mean;
  if (s == "median") return Pooling::median;
  throw std::invalid_argument("unknown pooling method '" + s + "'");
}

inline double pool(std::span<const double> series, Pooling method) {
  if (series.empty()) throw std::invalid_argument("pool: empty series");
  if (method == Pooling::mean) return detail::mean(series);
  std::vector<double> v(series.begin(), series.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct PooledCorrelation {
  Correlation lcc;
  Correlation srocc;
  std::vector<double> pooled;
};

/// Pool each video's continuous series to a scalar and correlate across
/// videos against the overall ground truth.
inline PooledCorrelation pool_overall(const std::vector<std::vector<double>> &series,
                                      std::span<const double> overall, Pooling method) {
  if (series.size() != overall.size())
    throw std::invalid_argument("pool_overall: one overall score per video required");
  PooledCorrelation r;
  for (const auto &s : series) r.pooled.push_back(pool(s, method));
  r.lcc = lcc(r.pooled, overall);
  r.srocc = srocc(r.pooled, overall);
  return r;
}

struct SessionMetrics {
  std::string video_id;
  std::size_t fold = 0;
  Correlation lcc;
  Correlation srocc;
  double rmse_n_percent = 0.0;
  double or_percent = 0.0;
};

inline SessionMetrics session_metrics(std::span<const double> pred, std::span<const double> truth,
                                      QoeScale scale, double or_delta) {
  SessionMetrics m;
  m.lcc = lcc(pred, truth);
  m.srocc = srocc(pred, truth);
  m.rmse_n_percent = rmse_n(pred, truth, scale);
  m.or_percent = outage_rate(pred, truth, scale, or_delta);
  return m;
}

/// Mean and median of one measure, skipping undefined entries.
struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
  std::size_t skipped = 0;
};

inline Summary summarize(const std::vector<double> &values) {
  Summary s;
  std::vector<double> ok;
  for (double v : values) {
    if (std::isnan(v)) ++s.skipped;
    else ok.push_back(v);
  }
  s.count = ok.size();
  if (!ok.empty()) {
    s.mean = detail::mean(ok);
    s.median = pool(ok, Pooling::median);
  }
  return s;
}

struct MetricsReport {
  std::string model;
  std::string vqa_metric;
  double or_delta = 0.10;
  std::vector<SessionMetrics> sessions;
  Summary lcc, srocc, rmse_n, outage;
  std::optional<PooledCorrelation> pooled_mean, pooled_median;

  void aggregate() {
    std::vector<double> a, b, c, d;
    for (const auto &s : sessions) {
      a.push_back(s.lcc.value);
      b.push_back(s.srocc.value);
      c.push_back(s.rmse_n_percent);
      d.push_back(s.or_percent);
    }
    lcc = summarize(a);
    srocc = summarize(b);
    rmse_n = summarize(c);
    outage = summarize(d);
  }
};

} // namespace qoe

// SPDX-License-Identifier: Apache-2.0
/**
 * @file   datasets.hpp
 * @brief  Trace corpora and the train/test split protocols used to
 *         evaluate continuous QoE models.
 *
 * Pattern identifiers may be compound: "q2+r5" names a video whose playout
 * pattern combines quality pattern q2 and rebuffering pattern r5. Two
 * videos share a playout pattern when their identifiers share any
 * component, so plain identifiers reduce to string equality.
 */
#pragma once

#include "features.hpp"
#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoe {

struct Corpus {
  std::string name;
  std::vector<SessionTrace> traces;

  const SessionTrace &at(const std::string &video_id) const {
    for (const auto &t : traces)
      if (t.video_id == video_id) return t;
    throw std::out_of_range("corpus '" + name + "' has no video '" + video_id + "'");
  }

  void validate_metadata() const {
    std::set<std::string> seen;
    for (const auto &t : traces) {
      if (t.video_id.empty()) throw std::invalid_argument("corpus '" + name + "': empty video_id");
      if (!seen.insert(t.video_id).second)
        throw std::invalid_argument("corpus '" + name + "': duplicate video_id '" + t.video_id + "'");
      if (t.content_id.empty() || t.pattern_id.empty())
        throw std::invalid_argument("corpus '" + name + "': video '" + t.video_id +
                                    "' is missing content_id or pattern_id");
    }
  }
};

enum class Protocol { netflix_style, lfovia_style, leave_p_out, random_fraction, fixed_fraction_80_20 };

inline const char *to_string(Protocol p) {
  switch (p) {
  case Protocol::netflix_style: return "netflix";
  case Protocol::lfovia_style: return "lfovia";
  case Protocol::leave_p_out: return "leave-p-out";
  case Protocol::random_fraction: return "random";
  case Protocol::fixed_fraction_80_20: return "fixed-80-20";
  }
  return "?";
}

inline Protocol parse_protocol(const std::string &s) {
  for (Protocol p : {Protocol::netflix_style, Protocol::lfovia_style, Protocol::leave_p_out,
                     Protocol::random_fraction, Protocol::fixed_fraction_80_20})
    if (s == to_string(p)) return p;
  throw std::invalid_argument("unknown protocol '" + s + "'");
}

struct Fold {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  bool degenerate = false; // empty training set; skipped downstream

  friend bool operator==(const Fold &, const Fold &) = default;
};

struct SplitPlan {
  Protocol protocol = Protocol::netflix_style;
  std::vector<Fold> folds;

  std::size_t degenerate_count() const {
    return static_cast<std::size_t>(
        std::count_if(folds.begin(), folds.end(), [](const Fold &f) { return f.degenerate; }));
  }

  friend bool operator==(const SplitPlan &, const SplitPlan &) = default;
};

inline std::vector<std::string> pattern_components(const std::string &pattern_id) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= pattern_id.size()) {
    const std::size_t end = std::min(pattern_id.find('+', start), pattern_id.size());
    if (end > start) parts.push_back(pattern_id.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

inline bool shares_pattern(const SessionTrace &a, const SessionTrace &b) {
  if (a.pattern_id == b.pattern_id) return true;
  const auto pa = pattern_components(a.pattern_id);
  const auto pb = pattern_components(b.pattern_id);
  for (const auto &x : pa)
    for (const auto &y : pb)
      if (x == y) return true;
  return false;
}

inline bool shares_content(const SessionTrace &a, const SessionTrace &b) {
  return a.content_id == b.content_id;
}

namespace detail {

template <class Excluded>
SplitPlan one_video_per_fold(const Corpus &corpus, Protocol protocol, Excluded excluded) {
  corpus.validate_metadata();
  SplitPlan plan{protocol, {}};
  for (const auto &test : corpus.traces) {
    Fold f;
    f.test_ids.push_back(test.video_id);
    for (const auto &cand : corpus.traces)
      if (cand.video_id != test.video_id && !excluded(test, cand)) f.train_ids.push_back(cand.video_id);
    f.degenerate = f.train_ids.empty();
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

inline std::size_t rounded_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

inline void require_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split: fraction must lie in (0, 1), got " + std::to_string(fraction));
}

} // namespace detail

/// One fold per video; training excludes every video sharing the test
/// video's content or playout pattern.
inline SplitPlan split_netflix(const Corpus &corpus) {
  return detail::one_video_per_fold(corpus, Protocol::netflix_style, [](const auto &t, const auto &c) {
    return shares_content(t, c) || shares_pattern(t, c);
  });
}

/// One fold per video; training excludes videos sharing the test video's
/// playout pattern.
inline SplitPlan split_lfovia(const Corpus &corpus) {
  return detail::one_video_per_fold(corpus, Protocol::lfovia_style,
                                    [](const auto &t, const auto &c) { return shares_pattern(t, c); });
}

enum class LeaveOutRule {
  content,             ///< train shares no content with any test video
  content_and_pattern, ///< additionally no shared playout pattern
};

/// Leave-p-out with test groups formed from content groups: videos are
/// ordered by content (stable in corpus order) and cut into consecutive
/// groups of `p`. When every content holds exactly p videos each group is
/// one content. Training keeps the videos that satisfy `rule` against every
/// test video of the group.
inline SplitPlan split_leave_p_out(const Corpus &corpus, std::size_t p,
                                   LeaveOutRule rule = LeaveOutRule::content) {
  corpus.validate_metadata();
  if (p == 0) throw std::invalid_argument("split_leave_p_out: p must be >= 1");
  std::vector<const SessionTrace *> ordered;
  std::map<std::string, std::size_t> first_seen;
  for (const auto &t : corpus.traces) first_seen.emplace(t.content_id, first_seen.size());
  for (const auto &t : corpus.traces) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(), [&](const auto *a, const auto *b) {
    return first_seen.at(a->content_id) < first_seen.at(b->content_id);
  });

  SplitPlan plan{Protocol::leave_p_out, {}};
  for (std::size_t start = 0; start < ordered.size(); start += p) {
    const std::size_t end = std::min(start + p, ordered.size());
    Fold f;
    for (std::size_t i = start; i < end; ++i) f.test_ids.push_back(ordered[i]->video_id);
    for (const auto &cand : corpus.traces) {
      bool keep = true;
      for (std::size_t i = start; i < end && keep; ++i) {
        const auto &test = *ordered[i];
        if (cand.video_id == test.video_id || shares_content(test, cand)) keep = false;
        else if (rule == LeaveOutRule::content_and_pattern && shares_pattern(test, cand)) keep = false;
      }
      if (keep) f.train_ids.push_back(cand.video_id);
    }
    f.degenerate = f.train_ids.empty();
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

/// One fold per video; training is a seeded random round(fraction*(n-1))
/// subset of the remaining videos.
inline SplitPlan split_random(const Corpus &corpus, double fraction, Rng &rng) {
  detail::require_fraction(fraction);
  corpus.validate_metadata();
  SplitPlan plan{Protocol::random_fraction, {}};
  const std::size_t n = corpus.traces.size();
  const std::size_t take = n > 0 ? detail::rounded_count(fraction, n - 1) : 0;
  for (const auto &test : corpus.traces) {
    std::vector<std::string> others;
    for (const auto &c : corpus.traces)
      if (c.video_id != test.video_id) others.push_back(c.video_id);
    shuffle(others, rng);
    others.resize(std::min(take, others.size()));
    std::sort(others.begin(), others.end());
    Fold f{std::move(others), {test.video_id}, false};
    f.degenerate = f.train_ids.empty();
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

/// A single seeded partition: round(fraction*n) train, the rest test.
inline SplitPlan split_fixed(const Corpus &corpus, double fraction, Rng &rng) {
  detail::require_fraction(fraction);
  corpus.validate_metadata();
  std::vector<std::string> ids;
  for (const auto &t : corpus.traces) ids.push_back(t.video_id);
  shuffle(ids, rng);
  const std::size_t take = detail::rounded_count(fraction, ids.size());
  Fold f;
  f.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
  f.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end());
  std::sort(f.train_ids.begin(), f.train_ids.end());
  std::sort(f.test_ids.begin(), f.test_ids.end());
  f.degenerate = f.train_ids.empty() || f.test_ids.empty();
  return SplitPlan{Protocol::fixed_fraction_80_20, {std::move(f)}};
}

struct SplitOptions {
  std::size_t p = 5;
  LeaveOutRule rule = LeaveOutRule::content;
  double fraction = 0.8;
};

inline SplitPlan make_plan(const Corpus &corpus, Protocol protocol, Rng &rng,
                           const SplitOptions &opts = {}) {
  switch (protocol) {
  case Protocol::netflix_style: return split_netflix(corpus);
  case Protocol::lfovia_style: return split_lfovia(corpus);
  case Protocol::leave_p_out: return split_leave_p_out(corpus, opts.p, opts.rule);
  case Protocol::random_fraction: return split_random(corpus, opts.fraction, rng);
  case Protocol::fixed_fraction_80_20: return split_fixed(corpus, opts.fraction, rng);
  }
  throw std::invalid_argument("make_plan: bad protocol");
}

/// Count (fold, train video, test video) triples that break the protocol's
/// exclusion rule, plus any train/test overlap.
inline std::size_t count_leaks(const SplitPlan &plan, const Corpus &corpus,
                               LeaveOutRule rule = LeaveOutRule::content) {
  std::size_t leaks = 0;
  for (const auto &f : plan.folds) {
    for (const auto &tr_id : f.train_ids) {
      const auto &tr = corpus.at(tr_id);
      for (const auto &te_id : f.test_ids) {
        const auto &te = corpus.at(te_id);
        bool bad = tr_id == te_id;
        switch (plan.protocol) {
        case Protocol::netflix_style: bad = bad || shares_content(tr, te) || shares_pattern(tr, te); break;
        case Protocol::lfovia_style: bad = bad || shares_pattern(tr, te); break;
        case Protocol::leave_p_out:
          bad = bad || shares_content(tr, te) ||
                (rule == LeaveOutRule::content_and_pattern && shares_pattern(tr, te));
          break;
        default: break;
        }
        if (bad) ++leaks;
      }
    }
  }
  return leaks;
}

} // namespace qoe

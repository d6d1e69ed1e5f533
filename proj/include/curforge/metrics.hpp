#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curforge/core.hpp"
#include "curforge/designer.hpp"
#include "curforge/error.hpp"
#include "curforge/stats.hpp"

namespace curforge {

/// Floor for the denominator of F.
inline constexpr double kEffectivenessEps = 1e-9;

struct Effectiveness {
  double alpha = 0.0;
  double beta = 0.0;
  double f = 0.0;
};

/// F = 2 / (beta + 1/alpha), 0 when alpha is 0.
inline double effectiveness(double alpha, double beta) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::out_of_range, "alpha outside [0,1]");
  if (!(beta >= -1.0 && beta <= 1.0)) throw Error(Errc::out_of_range, "beta outside [-1,1]");
  if (alpha == 0.0) return 0.0;
  return 2.0 / std::max(beta + 1.0 / alpha, kEffectivenessEps);
}

/// alpha: class-count-weighted mean of row `row` (0-based). beta: drop in
/// first-task accuracy between row 0 and row `row`.
inline std::pair<double, double> alpha_beta(const AccuracyMatrix& acc, std::size_t row) {
  const auto r = acc.row(row);
  const auto& w = acc.class_counts();
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j <= row; ++j) {
    num += static_cast<double>(w[j]) * r[j];
    den += static_cast<double>(w[j]);
  }
  const double alpha = std::clamp(num / den, 0.0, 1.0);
  const double beta = acc.at(0, 0) - r[0];
  return {alpha, beta};
}

inline Effectiveness evaluate_effectiveness(const AccuracyMatrix& acc, std::size_t row) {
  const auto [a, b] = alpha_beta(acc, row);
  return {a, b, effectiveness(a, b)};
}

/// Fills alpha/beta/f of a record from its final accuracy row.
inline RunRecord make_run_record(Curriculum c, std::string strategy, std::uint64_t seed,
                                 AccuracyMatrix acc) {
  if (acc.tasks() == 0) throw Error(Errc::empty_input, "accuracy matrix has no tasks");
  const auto e = evaluate_effectiveness(acc, acc.tasks() - 1);
  return {std::move(c), std::move(strategy), seed, std::move(acc), e.alpha, e.beta, e.f};
}

/// Guessing uniformly among all seen classes: every seen task scores 1/(classes seen so far).
inline AccuracyMatrix random_baseline(const std::vector<std::size_t>& task_class_counts) {
  AccuracyMatrix acc(task_class_counts);
  std::size_t seen = 0;
  for (std::size_t t = 0; t < acc.tasks(); ++t) {
    seen += task_class_counts[t];
    acc.set_row(t, std::vector<double>(t + 1, 1.0 / static_cast<double>(seen)));
  }
  return acc;
}

/// Perfect on the current task, total forgetting of every earlier one.
inline AccuracyMatrix overfitting_baseline(const std::vector<std::size_t>& task_class_counts) {
  AccuracyMatrix acc(task_class_counts);
  for (std::size_t t = 0; t < acc.tasks(); ++t) {
    std::vector<double> row(t + 1, 0.0);
    row[t] = 1.0;
    acc.set_row(t, std::move(row));
  }
  return acc;
}

struct FOverTime {
  std::vector<double> f;
  std::vector<double> random;
  std::vector<double> overfitting;
};

inline FOverTime f_over_time(const AccuracyMatrix& acc) {
  FOverTime out;
  const auto rnd = random_baseline(acc.class_counts());
  const auto ovf = overfitting_baseline(acc.class_counts());
  for (std::size_t t = 0; t < acc.tasks() && acc.has_row(t); ++t) {
    out.f.push_back(evaluate_effectiveness(acc, t).f);
    out.random.push_back(evaluate_effectiveness(rnd, t).f);
    out.overfitting.push_back(evaluate_effectiveness(ovf, t).f);
  }
  return out;
}

namespace detail {

inline void require_same_universe(const RankedCurricula& a, const RankedCurricula& b) {
  auto ua = a.curricula();
  auto ub = b.curricula();
  std::sort(ua.begin(), ua.end());
  std::sort(ub.begin(), ub.end());
  if (ua != ub) throw Error(Errc::validation, "rankings cover different curriculum sets");
}

}  // namespace detail

/// Fraction of the designer's top-k found in the union of the empirical top-k sets.
inline double recall_at_k(const RankedCurricula& cd, std::span<const RankedCurricula> empirical,
                          std::size_t k) {
  if (k < 1 || k > cd.size()) throw Error(Errc::out_of_range, "recall@k needs 1 <= k <= |ranking|");
  std::vector<Curriculum> pool;
  for (const auto& e : empirical) {
    detail::require_same_universe(cd, e);
    auto t = e.top(k);
    pool.insert(pool.end(), t.begin(), t.end());
  }
  std::sort(pool.begin(), pool.end());
  std::size_t hits = 0;
  for (const auto& c : cd.top(k)) {
    if (std::binary_search(pool.begin(), pool.end(), c)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

using ScoredCurriculum = std::pair<Curriculum, double>;

/// Equal-width bins over [min F, max F]. members[0] is the lowest tier,
/// members.back() the top; each bin is sorted by F descending.
struct TierPartition {
  std::vector<double> bounds;
  std::vector<std::vector<ScoredCurriculum>> members;

  const std::vector<ScoredCurriculum>& top() const { return members.back(); }

  std::vector<Curriculum> top_curricula() const {
    std::vector<Curriculum> out;
    for (const auto& m : top()) out.push_back(m.first);
    return out;
  }

  /// 0-based tier index holding `c`, or tiers() when absent.
  std::size_t tier_of(const Curriculum& c) const {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (const auto& m : members[i]) {
        if (m.first == c) return i;
      }
    }
    return members.size();
  }

  std::size_t tiers() const noexcept { return members.size(); }
};

/// Values sitting exactly on an inner bound go to the higher tier. If all
/// values are equal everything lands in the top tier.
inline TierPartition tier_partition(std::vector<ScoredCurriculum> records, std::size_t tiers = 5) {
  if (records.empty()) throw Error(Errc::empty_input, "tier partition of no curricula");
  if (tiers < 1) throw Error(Errc::invalid_argument, "tier count must be positive");
  auto [lo_it, hi_it] = std::minmax_element(records.begin(), records.end(),
                                            [](const auto& a, const auto& b) { return a.second < b.second; });
  const double lo = lo_it->second;
  const double hi = hi_it->second;
  const double width = (hi - lo) / static_cast<double>(tiers);

  TierPartition out;
  out.bounds.resize(tiers + 1);
  for (std::size_t i = 0; i <= tiers; ++i) out.bounds[i] = lo + width * static_cast<double>(i);
  out.bounds.back() = hi;
  out.members.resize(tiers);

  for (auto& r : records) {
    std::size_t tier = tiers - 1;
    if (hi > lo) {
      tier = 0;
      for (std::size_t i = 1; i < tiers; ++i) {
        if (r.second >= out.bounds[i]) tier = i;
      }
    }
    out.members[tier].push_back(std::move(r));
  }
  for (auto& m : out.members) {
    std::stable_sort(m.begin(), m.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
  }
  return out;
}

inline TierPartition tier_partition(const RankedCurricula& ranking, std::size_t tiers = 5) {
  std::vector<ScoredCurriculum> records;
  records.reserve(ranking.size());
  for (const auto& e : ranking.entries) records.emplace_back(e.curriculum, e.score);
  return tier_partition(std::move(records), tiers);
}

/// Position-wise interleaving: the p-th letter of every string in order, for p = 1..N.
inline std::string interleave_concat(std::span<const std::string> strings) {
  if (strings.empty()) return {};
  const std::size_t n = strings.front().size();
  for (const auto& s : strings) {
    if (s.size() != n) throw Error(Errc::dimension_mismatch, "interleaved curricula differ in length");
  }
  std::string out;
  out.reserve(n * strings.size());
  for (std::size_t p = 0; p < n; ++p) {
    for (const auto& s : strings) out.push_back(s[p]);
  }
  return out;
}

inline std::string interleave_concat(std::span<const Curriculum> set) {
  std::vector<std::string> strings;
  strings.reserve(set.size());
  for (const auto& c : set) strings.push_back(curriculum_to_string(c));
  return interleave_concat(std::span<const std::string>(strings));
}

/// Fraction of positions at which two equal-length strings differ.
inline double normalized_hamming(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) throw Error(Errc::dimension_mismatch, "hamming distance of unequal lengths");
  if (a.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

/// Curriculum discrepancy between two ranked lists.
///
/// One pass per reference count: with reference n, the first min(n, |a|, |b|)
/// curricula of each list are interleaved and compared by normalized Hamming
/// distance. The result is the mean of the pass with `ref_a` and the pass with
/// `ref_b`. Passing full rankings with top-tier sizes as references lets the
/// longer list fill up to the other's tier size.
inline double discrepancy_h(std::span<const Curriculum> a, std::span<const Curriculum> b,
                            std::size_t ref_a, std::size_t ref_b) {
  if (a.empty() || b.empty()) throw Error(Errc::empty_input, "discrepancy of an empty curriculum set");
  if (ref_a == 0 || ref_b == 0) throw Error(Errc::invalid_argument, "discrepancy reference count must be positive");
  const std::size_t len = a.front().class_count();
  for (const auto* set : {&a, &b}) {
    for (const auto& c : *set) {
      if (c.class_count() != len) throw Error(Errc::dimension_mismatch, "curricula of different lengths");
    }
  }
  auto pass = [&](std::size_t ref) {
    const std::size_t m = std::min({ref, a.size(), b.size()});
    return normalized_hamming(interleave_concat(a.first(m)), interleave_concat(b.first(m)));
  };
  return 0.5 * (pass(ref_a) + pass(ref_b));
}

inline double discrepancy_h(std::span<const Curriculum> a, std::span<const Curriculum> b) {
  return discrepancy_h(a, b, a.size(), b.size());
}

/// Spearman's rho between two rankings of the same curricula, computed on
/// their scores with tied scores sharing an average rank.
inline double spearman(const RankedCurricula& a, const RankedCurricula& b) {
  detail::require_same_universe(a, b);
  auto sorted_scores = [](const RankedCurricula& r) {
    std::vector<std::pair<Curriculum, double>> v;
    v.reserve(r.size());
    for (const auto& e : r.entries) v.emplace_back(e.curriculum, e.score);
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<double> s;
    s.reserve(v.size());
    for (auto& p : v) s.push_back(p.second);
    return s;
  };
  const auto sa = sorted_scores(a);
  const auto sb = sorted_scores(b);
  return spearman_rho(sa, sb);
}

}  // namespace curforge

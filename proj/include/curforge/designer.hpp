#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curforge/core.hpp"
#include "curforge/distance.hpp"
#include "curforge/error.hpp"
#include "curforge/parallel.hpp"
#include "curforge/rng.hpp"

namespace curforge {

/// Per-step advantages v_1..v_T of one curriculum and their sum s.
struct AdvantageBreakdown {
  std::vector<double> v;
  double s = 0.0;
};

enum class RankSource { designer, empirical, random };

constexpr std::string_view to_string(RankSource s) noexcept {
  switch (s) {
    case RankSource::designer: return "designer";
    case RankSource::empirical: return "empirical";
    case RankSource::random: return "random";
  }
  return "unknown";
}

struct RankedEntry {
  Curriculum curriculum;
  double score = 0.0;
  std::vector<double> advantages;  // designer rankings only
};

/// Curricula sorted by score, highest first; equal scores fall back to the
/// lexicographic task-index permutation.
struct RankedCurricula {
  RankSource source = RankSource::designer;
  std::vector<RankedEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }

  std::vector<Curriculum> curricula() const {
    std::vector<Curriculum> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.curriculum);
    return out;
  }

  std::vector<Curriculum> top(std::size_t k) const {
    k = std::min(k, entries.size());
    std::vector<Curriculum> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(entries[i].curriculum);
    return out;
  }
};

inline RankedCurricula make_ranking(std::vector<RankedEntry> entries, RankSource source) {
  std::stable_sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.curriculum < b.curriculum;
  });
  return {source, std::move(entries)};
}

namespace detail {

// Population variance, two-pass.
inline double population_variance(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size());
}

inline void require_scorable(const Curriculum& c, const DistanceMatrix& d) {
  if (c.size() < 2) throw Error(Errc::invalid_argument, "curriculum needs at least 2 tasks to score");
  if (!d.normalized()) {
    throw Error(Errc::validation, "designer scoring needs a distance matrix normalized to [0,1]");
  }
  for (auto idx : c.order()) {
    if (idx >= d.size()) throw Error(Errc::dimension_mismatch, "curriculum task index exceeds distance matrix");
  }
}

}  // namespace detail

/// Advantage of the task at 1-based step `t`, with M(i, j) the distance between
/// the tasks at curriculum positions i and j:
///   t = 1:               1 - Var{M(1, j) : j = 2..T}
///   1 < t <= floor(T/2): M(t, t-1)
///   floor(T/2) < t <= T: 1 - M(t, T-t+1)
inline double advantage(std::size_t t, const Curriculum& c, const DistanceMatrix& d) {
  detail::require_scorable(c, d);
  const std::size_t T = c.size();
  if (t < 1 || t > T) throw Error(Errc::out_of_range, "advantage step outside 1..T");
  const auto& p = c.order();
  auto M = [&](std::size_t i, std::size_t j) { return d(p[i - 1], p[j - 1]); };
  if (t == 1) {
    std::vector<double> first_row;
    first_row.reserve(T - 1);
    for (std::size_t j = 2; j <= T; ++j) first_row.push_back(M(1, j));
    return 1.0 - detail::population_variance(first_row);
  }
  if (t <= T / 2) return M(t, t - 1);
  return 1.0 - M(t, T - t + 1);
}

/// Scores a curriculum by walking it once: the first-step variance term, then
/// a forward pass that adds the adjacent-distance term up to the midpoint and
/// the mirrored-similarity term after it. s is summed in step order.
inline AdvantageBreakdown score_curriculum(const Curriculum& c, const DistanceMatrix& d) {
  detail::require_scorable(c, d);
  const auto& p = c.order();
  const std::size_t T = p.size();
  const std::size_t half = T / 2;

  AdvantageBreakdown out;
  out.v.reserve(T);

  std::vector<double> first_row(T - 1);
  for (std::size_t j = 1; j < T; ++j) first_row[j - 1] = d(p[0], p[j]);
  out.v.push_back(1.0 - detail::population_variance(first_row));
  out.s = out.v.back();

  for (std::size_t t = 2; t <= T; ++t) {
    const double v = t <= half ? d(p[t - 1], p[t - 2]) : 1.0 - d(p[t - 1], p[T - t]);
    out.v.push_back(v);
    out.s += v;
  }
  return out;
}

struct RankOptions {
  std::size_t max_curricula = 3628800;  // 10!
  std::size_t workers = 1;
};

/// Scores every ordering of `tasks` against `d` (indexed by task) and ranks them.
inline RankedCurricula rank_all(std::span<const TaskSpec> tasks, const DistanceMatrix& d,
                                const RankOptions& opts = {}) {
  require_disjoint_tasks(tasks);
  if (tasks.size() > 20 || factorial(tasks.size()) > opts.max_curricula) {
    throw Error(Errc::limit_exceeded,
                std::to_string(tasks.size()) + " tasks give more than " +
                    std::to_string(opts.max_curricula) + " curricula; reduce the number of tasks");
  }
  if (d.size() != tasks.size()) {
    throw Error(Errc::dimension_mismatch, "distance matrix has " + std::to_string(d.size()) +
                                              " rows for " + std::to_string(tasks.size()) + " tasks");
  }
  auto curricula = enumerate_curricula(tasks);
  std::vector<RankedEntry> entries(curricula.size());
  parallel_for(curricula.size(), opts.workers, [&](std::size_t i) {
    auto b = score_curriculum(curricula[i], d);
    entries[i] = {std::move(curricula[i]), b.s, std::move(b.v)};
  });
  return make_ranking(std::move(entries), RankSource::designer);
}

/// Uniformly random order of `curricula`, reproducible from `seed`. The entry
/// at position i (0-based) gets score n - i.
inline RankedCurricula random_rank(std::span<const Curriculum> curricula, std::uint64_t seed) {
  if (curricula.empty()) throw Error(Errc::empty_input, "nothing to rank");
  std::vector<Curriculum> shuffled(curricula.begin(), curricula.end());
  Rng rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  RankedCurricula out{RankSource::random, {}};
  out.entries.reserve(shuffled.size());
  const auto n = static_cast<double>(shuffled.size());
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    out.entries.push_back({std::move(shuffled[i]), n - static_cast<double>(i), {}});
  }
  return out;
}

}  // namespace curforge

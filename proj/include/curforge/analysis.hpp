#pragma once

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "curforge/config.hpp"
#include "curforge/core.hpp"
#include "curforge/designer.hpp"
#include "curforge/error.hpp"
#include "curforge/experiment.hpp"
#include "curforge/io.hpp"
#include "curforge/metrics.hpp"
#include "curforge/stats.hpp"

#ifndef CURFORGE_VERSION
#define CURFORGE_VERSION "0.0.0"
#endif

namespace curforge {

struct StrategyAnalysis {
  std::string name;
  RankedCurricula empirical;  // score = mean final F over seeds
  TierPartition tiers;
  std::size_t records = 0;
  double mean_f = 0.0;
  double min_f = 0.0;  // over curricula, of the per-curriculum mean
  double max_f = 0.0;
  std::optional<TTestResult> top_vs_bottom;  // absent when both groups are constant
  double top_mean = 0.0;
  double bottom_mean = 0.0;
  std::vector<double> f_over_time;  // mean over all records, per step
  double h_designer = 0.0;
  double rho_designer = 0.0;
  double h_random_mean = 0.0;
  double rho_random_mean = 0.0;
};

struct PairAgreement {
  std::string a;
  std::string b;
  double h = 0.0;
  double rho = 0.0;
};

struct Analysis {
  RankedCurricula designer;
  TierPartition designer_tiers;
  std::vector<StrategyAnalysis> strategies;  // sorted by name
  std::vector<std::string> recall_strategies;
  std::vector<double> recall_cd;           // index k-1
  std::vector<double> recall_random_mean;  // index k-1
  std::vector<PairAgreement> between;      // unordered strategy pairs
  double between_h_mean = 0.0;
  double random_h_mean = 0.0;  // algorithm-random H averaged over strategies
  std::vector<double> random_baseline_f;
  std::vector<double> overfitting_baseline_f;
  std::size_t random_repeats = 0;
  std::size_t top_bottom_k = 0;
  std::size_t record_count = 0;
};

namespace detail {

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline std::size_t top_tier_size(const RankedCurricula& r, std::size_t tiers) {
  return tier_partition(r, tiers).top().size();
}

}  // namespace detail

/// Every statistic of the report, computed from run records only (plus the
/// designer ranking and the seeded random designers, both deterministic).
///
/// Each strategy's empirical ranking scores a curriculum by its mean final F
/// over seeds; every curriculum needs at least one record per strategy.
inline Analysis analyze_records(const ExperimentConfig& cfg, std::span<const TaskSpec> tasks,
                                const RankedCurricula& designer, std::span<const RunRecord> records) {
  if (records.empty()) throw Error(Errc::empty_input, "no run records to analyze");
  const auto curricula = enumerate_curricula(tasks);
  const std::size_t n = curricula.size();

  Analysis out;
  out.designer = designer;
  out.designer_tiers = tier_partition(designer, cfg.tiers);
  out.random_repeats = cfg.random_repeats;
  out.top_bottom_k = cfg.top_bottom_k;
  out.record_count = records.size();

  std::map<std::string, std::map<std::vector<std::size_t>, std::vector<const RunRecord*>>> by;
  for (const auto& r : records) {
    if (!record_consistent(r)) {
      throw Error(Errc::validation, "record for " + curriculum_to_string(r.curriculum) + "/" + r.strategy +
                                        " has alpha, beta or f that disagree with its accuracy matrix");
    }
    by[r.strategy][r.curriculum.order()].push_back(&r);
  }

  for (auto& [name, per_curriculum] : by) {
    StrategyAnalysis sa;
    sa.name = name;
    std::vector<RankedEntry> entries;
    entries.reserve(n);
    for (const auto& c : curricula) {
      auto it = per_curriculum.find(c.order());
      if (it == per_curriculum.end()) {
        throw Error(Errc::validation,
                    "strategy '" + name + "' has no record for curriculum " + curriculum_to_string(c));
      }
      double f = 0.0;
      for (const auto* r : it->second) f += r->f;
      entries.push_back({c, f / static_cast<double>(it->second.size()), {}});
      sa.records += it->second.size();
    }
    if (per_curriculum.size() != n) throw Error(Errc::validation, "records reference unknown curricula");
    sa.empirical = make_ranking(std::move(entries), RankSource::empirical);
    sa.tiers = tier_partition(sa.empirical, cfg.tiers);

    std::vector<double> scores;
    for (const auto& e : sa.empirical.entries) scores.push_back(e.score);
    sa.mean_f = detail::mean_of(scores);
    sa.max_f = scores.front();
    sa.min_f = scores.back();

    const std::size_t k = cfg.top_bottom_k;
    if (2 * k <= n) {
      std::vector<double> top(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k));
      std::vector<double> bottom(scores.end() - static_cast<std::ptrdiff_t>(k), scores.end());
      sa.top_mean = detail::mean_of(top);
      sa.bottom_mean = detail::mean_of(bottom);
      try {
        sa.top_vs_bottom = two_sample_ttest(top, bottom, cfg.ttest);
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate) throw;
      }
    }

    std::vector<double> fot(tasks.size(), 0.0);
    std::size_t count = 0;
    for (const auto& [order, recs] : per_curriculum) {
      for (const auto* r : recs) {
        const auto ft = f_over_time(r->acc);
        for (std::size_t t = 0; t < ft.f.size(); ++t) fot[t] += ft.f[t];
        if (out.random_baseline_f.empty()) {
          out.random_baseline_f = ft.random;
          out.overfitting_baseline_f = ft.overfitting;
        }
        ++count;
      }
    }
    for (auto& v : fot) v /= static_cast<double>(count);
    sa.f_over_time = std::move(fot);
    out.strategies.push_back(std::move(sa));
  }

  if (cfg.recall_strategies.empty()) {
    for (const auto& sa : out.strategies) {
      const auto* sc = cfg.find_strategy(sa.name);
      if (!sc || sc->kind != StrategyKind::replay) out.recall_strategies.push_back(sa.name);
    }
  } else {
    out.recall_strategies = cfg.recall_strategies;
  }
  std::vector<RankedCurricula> recall_pool;
  for (const auto& name : out.recall_strategies) {
    auto it = std::find_if(out.strategies.begin(), out.strategies.end(),
                           [&](const StrategyAnalysis& s) { return s.name == name; });
    if (it == out.strategies.end()) throw Error(Errc::validation, "no records for recall strategy '" + name + "'");
    recall_pool.push_back(it->empirical);
  }

  const auto randoms = random_designers(cfg, curricula);
  const std::size_t kmax = std::min(cfg.k_max, n);
  if (!recall_pool.empty()) {
    for (std::size_t k = 1; k <= kmax; ++k) {
      out.recall_cd.push_back(recall_at_k(designer, recall_pool, k));
      double acc = 0.0;
      for (const auto& r : randoms) acc += recall_at_k(r, recall_pool, k);
      out.recall_random_mean.push_back(acc / static_cast<double>(randoms.size()));
    }
  }

  const auto cd_list = designer.curricula();
  const auto cd_top = out.designer_tiers.top().size();
  std::vector<std::vector<Curriculum>> random_lists;
  std::vector<std::size_t> random_tops;
  for (const auto& r : randoms) {
    random_lists.push_back(r.curricula());
    random_tops.push_back(detail::top_tier_size(r, cfg.tiers));
  }

  double random_h_total = 0.0;
  for (auto& sa : out.strategies) {
    const auto list = sa.empirical.curricula();
    const auto top = sa.tiers.top().size();
    sa.h_designer = discrepancy_h(list, cd_list, top, cd_top);
    sa.rho_designer = spearman(sa.empirical, designer);
    double h = 0.0, rho = 0.0;
    for (std::size_t r = 0; r < randoms.size(); ++r) {
      h += discrepancy_h(list, random_lists[r], top, random_tops[r]);
      rho += spearman(sa.empirical, randoms[r]);
    }
    sa.h_random_mean = h / static_cast<double>(randoms.size());
    sa.rho_random_mean = rho / static_cast<double>(randoms.size());
    random_h_total += sa.h_random_mean;
  }
  out.random_h_mean = random_h_total / static_cast<double>(out.strategies.size());

  double between_total = 0.0;
  for (std::size_t i = 0; i < out.strategies.size(); ++i) {
    for (std::size_t j = i + 1; j < out.strategies.size(); ++j) {
      const auto& a = out.strategies[i];
      const auto& b = out.strategies[j];
      PairAgreement p{a.name, b.name,
                      discrepancy_h(a.empirical.curricula(), b.empirical.curricula(), a.tiers.top().size(),
                                    b.tiers.top().size()),
                      spearman(a.empirical, b.empirical)};
      between_total += p.h;
      out.between.push_back(std::move(p));
    }
  }
  if (!out.between.empty()) out.between_h_mean = between_total / static_cast<double>(out.between.size());
  return out;
}

// ---- report JSON ------------------------------------------------------------

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline Json ranking_rows(const RankedCurricula& r, const TierPartition& tiers) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    Json row{{"rank", i + 1},
             {"curriculum", curriculum_to_json(e.curriculum)},
             {"letters", curriculum_to_string(e.curriculum)},
             {"score", e.score},
             {"tier", tiers.tier_of(e.curriculum) + 1}};
    if (!e.advantages.empty()) row["advantages"] = e.advantages;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json tier_bounds(const TierPartition& t) {
  Json out = Json::array();
  for (std::size_t i = 0; i < t.tiers(); ++i) {
    out.push_back({{"tier", i + 1}, {"lo", t.bounds[i]}, {"hi", t.bounds[i + 1]}, {"size", t.members[i].size()}});
  }
  return out;
}

}  // namespace detail

/// Report body: everything except the `provenance.created` timestamp is a
/// deterministic function of the configuration and the records.
inline Json analysis_to_json(const Analysis& a, const ExperimentConfig& cfg, std::span<const TaskSpec> tasks) {
  Json rep;
  rep["provenance"] = {{"software", "curforge"},
                       {"version", CURFORGE_VERSION},
                       {"config_hash", hex64(fnv1a64(cfg.source_text))},
                       {"created", utc_timestamp()},
                       {"records", a.record_count}};
  Json task_json = Json::array();
  for (const auto& t : tasks) task_json.push_back(t.classes);
  rep["setup"] = {{"paradigm", std::string(to_string(cfg.paradigm))},
                  {"tasks", std::move(task_json)},
                  {"seeds", cfg.seeds},
                  {"tiers", cfg.tiers},
                  {"random_repeats", a.random_repeats},
                  {"top_bottom_k", a.top_bottom_k},
                  {"ttest", std::string(to_string(cfg.ttest))},
                  {"metric", std::string(to_string(cfg.designer.metric))},
                  {"normalized", cfg.designer.normalize}};

  rep["designer"] = {{"ranking", detail::ranking_rows(a.designer, a.designer_tiers)},
                     {"tiers", detail::tier_bounds(a.designer_tiers)},
                     // with an odd task count the middle step always scores 1
                     {"constant_middle_step", tasks.size() % 2 == 1}};

  Json strategies = Json::object();
  for (const auto& s : a.strategies) {
    Json t = nullptr;
    if (s.top_vs_bottom) t = {{"t", s.top_vs_bottom->t}, {"df", s.top_vs_bottom->df}, {"p", s.top_vs_bottom->p}};
    strategies[s.name] = {{"records", s.records},
                          {"mean_f", s.mean_f},
                          {"min_f", s.min_f},
                          {"max_f", s.max_f},
                          {"ranking", detail::ranking_rows(s.empirical, s.tiers)},
                          {"tiers", detail::tier_bounds(s.tiers)},
                          {"top_vs_bottom", {{"k", a.top_bottom_k},
                                             {"top_mean", s.top_mean},
                                             {"bottom_mean", s.bottom_mean},
                                             {"test", std::move(t)}}},
                          {"f_over_time", s.f_over_time}};
  }
  rep["strategies"] = std::move(strategies);

  Json recall = Json::array();
  for (std::size_t k = 0; k < a.recall_cd.size(); ++k) {
    recall.push_back({{"k", k + 1}, {"designer", a.recall_cd[k]}, {"random_mean", a.recall_random_mean[k]}});
  }
  rep["recall_at_k"] = {{"strategies", a.recall_strategies}, {"curve", std::move(recall)}};

  Json between = Json::array();
  Json between_rho = Json::array();
  for (const auto& p : a.between) {
    between.push_back({{"a", p.a}, {"b", p.b}, {"h", p.h}});
    between_rho.push_back({{"a", p.a}, {"b", p.b}, {"rho", p.rho}});
  }
  Json vs_cd = Json::object(), vs_random = Json::object(), rho_cd = Json::object(), rho_random = Json::object();
  for (const auto& s : a.strategies) {
    vs_cd[s.name] = s.h_designer;
    vs_random[s.name] = s.h_random_mean;
    rho_cd[s.name] = s.rho_designer;
    rho_random[s.name] = s.rho_random_mean;
  }
  rep["discrepancy_h"] = {{"between_algorithms", std::move(between)},
                          {"between_algorithms_mean", a.between_h_mean},
                          {"algorithm_designer", std::move(vs_cd)},
                          {"algorithm_random_mean", std::move(vs_random)},
                          {"algorithm_random_overall", a.random_h_mean}};
  rep["spearman"] = {{"between_algorithms", std::move(between_rho)},
                     {"algorithm_designer", std::move(rho_cd)},
                     {"algorithm_random_mean", std::move(rho_random)}};
  rep["f_over_time"] = {{"random_baseline", a.random_baseline_f}, {"overfitting_baseline", a.overfitting_baseline_f}};
  return rep;
}

/// Report with the timestamp removed, for comparing two reports.
inline Json report_body(Json report) {
  if (report.contains("provenance")) report["provenance"].erase("created");
  return report;
}

}  // namespace curforge

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "curforge/core.hpp"
#include "curforge/data.hpp"
#include "curforge/designer.hpp"
#include "curforge/distance.hpp"
#include "curforge/error.hpp"
#include "curforge/metrics.hpp"

namespace curforge {

using Json = nlohmann::json;

namespace detail {

template <typename T>
T json_get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::parse, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::parse, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

// ---- curricula --------------------------------------------------------------

/// Arrays of class ids, one per task: [[0],[2],[1],[4],[3]].
inline Json curriculum_to_json(const Curriculum& c) {
  Json out = Json::array();
  for (const auto& t : c.tasks()) out.push_back(t.classes);
  return out;
}

inline std::vector<TaskSpec> tasks_from_json(const Json& j) {
  if (!j.is_array()) throw Error(Errc::parse, "curriculum must be an array of tasks");
  std::vector<TaskSpec> tasks;
  tasks.reserve(j.size());
  for (const auto& t : j) {
    if (!t.is_array()) throw Error(Errc::parse, "task must be an array of class ids");
    TaskSpec spec;
    for (const auto& c : t) {
      if (!c.is_number_unsigned()) throw Error(Errc::parse, "class id must be a non-negative integer");
      spec.classes.push_back(c.get<ClassId>());
    }
    tasks.push_back(std::move(spec));
  }
  return tasks;
}

inline Curriculum curriculum_from_json(const Json& j, std::span<const TaskSpec> base) {
  return Curriculum::from_tasks(base, tasks_from_json(j));
}

// ---- distance matrices ------------------------------------------------------

inline Json distance_matrix_to_json(const DistanceMatrix& d) {
  return Json{{"metric", std::string(to_string(d.metric()))},
              {"normalized", d.normalized()},
              {"n", d.size()},
              {"d", d.values()}};
}

inline DistanceMatrix distance_matrix_from_json(const Json& j) {
  const auto n = detail::json_get<std::size_t>(j, "n");
  return DistanceMatrix(n, detail::json_get<std::vector<double>>(j, "d"),
                        metric_from_string(detail::json_get<std::string>(j, "metric")),
                        detail::json_get<bool>(j, "normalized"));
}

inline Json prototypes_to_json(std::span<const Prototype> protos) {
  Json out = Json::array();
  for (const auto& p : protos) {
    out.push_back({{"id", p.id}, {"mean", p.mean}, {"sample_count", p.sample_count}});
  }
  return out;
}

// ---- rankings ---------------------------------------------------------------

inline Json ranking_to_json(const RankedCurricula& r) {
  Json out = Json::array();
  for (const auto& e : r.entries) {
    Json row{{"curriculum", curriculum_to_json(e.curriculum)}, {"score", e.score}};
    if (r.source == RankSource::designer) row["advantages"] = e.advantages;
    out.push_back(std::move(row));
  }
  return out;
}

inline RankedCurricula ranking_from_json(const Json& j, std::span<const TaskSpec> base, RankSource source) {
  if (!j.is_array()) throw Error(Errc::parse, "ranking must be an array");
  std::vector<RankedEntry> entries;
  entries.reserve(j.size());
  for (const auto& row : j) {
    RankedEntry e;
    e.curriculum = curriculum_from_json(detail::json_get<Json>(row, "curriculum"), base);
    e.score = detail::json_get<double>(row, "score");
    if (row.contains("advantages")) e.advantages = detail::json_get<std::vector<double>>(row, "advantages");
    entries.push_back(std::move(e));
  }
  return make_ranking(std::move(entries), source);
}

// ---- run records ------------------------------------------------------------

inline Json run_record_to_json(const RunRecord& r) {
  Json acc = Json::array();
  for (std::size_t t = 0; t < r.acc.tasks(); ++t) {
    const auto row = r.acc.row(t);
    acc.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return Json{{"curriculum", curriculum_to_json(r.curriculum)},
              {"strategy", r.strategy},
              {"seed", r.seed},
              {"acc", std::move(acc)},
              {"alpha", r.alpha},
              {"beta", r.beta},
              {"f", r.f}};
}

/// Parses one record. The stored alpha, beta and f are kept as written; use
/// record_consistent() to compare them with a recomputation from `acc`.
inline RunRecord run_record_from_json(const Json& j, std::span<const TaskSpec> base) {
  RunRecord r;
  if (!j.is_object()) throw Error(Errc::parse, "run record must be an object");
  r.curriculum = curriculum_from_json(detail::json_get<Json>(j, "curriculum"), base);
  r.strategy = detail::json_get<std::string>(j, "strategy");
  r.seed = detail::json_get<std::uint64_t>(j, "seed");
  std::vector<std::size_t> counts;
  for (const auto& t : r.curriculum.tasks()) counts.push_back(t.classes.size());
  r.acc = AccuracyMatrix(std::move(counts));
  const auto rows = detail::json_get<std::vector<std::vector<double>>>(j, "acc");
  if (rows.size() != r.acc.tasks()) throw Error(Errc::parse, "accuracy matrix has the wrong number of rows");
  for (std::size_t t = 0; t < rows.size(); ++t) r.acc.set_row(t, rows[t]);
  r.alpha = detail::json_get<double>(j, "alpha");
  r.beta = detail::json_get<double>(j, "beta");
  r.f = detail::json_get<double>(j, "f");
  return r;
}

/// True when the stored alpha, beta and f equal a recomputation from the
/// accuracy matrix (to `tol`).
inline bool record_consistent(const RunRecord& r, double tol = 1e-12) {
  const auto e = evaluate_effectiveness(r.acc, r.acc.tasks() - 1);
  return std::abs(e.alpha - r.alpha) <= tol && std::abs(e.beta - r.beta) <= tol && std::abs(e.f - r.f) <= tol;
}

// ---- dataset manifest -------------------------------------------------------

inline Json manifest_to_json(const DatasetManifest& m) {
  Json j{{"name", m.name},
         {"n_classes", m.n_classes},
         {"dim", m.dim},
         {"train_per_class", m.train_per_class},
         {"test_per_class", m.test_per_class},
         {"source", m.source}};
  if (m.source == "synthetic") {
    j["preset"] = m.preset;
    j["seed"] = m.seed;
    j["spread"] = m.spread;
  } else {
    j["features_path"] = m.features_path;
  }
  return j;
}

inline DatasetManifest manifest_from_json(const Json& j) {
  DatasetManifest m;
  m.name = j.value("name", std::string("dataset"));
  m.n_classes = detail::json_get<std::size_t>(j, "n_classes");
  m.dim = detail::json_get<std::size_t>(j, "dim");
  m.train_per_class = detail::json_get<std::size_t>(j, "train_per_class");
  m.test_per_class = detail::json_get<std::size_t>(j, "test_per_class");
  m.source = j.value("source", std::string("file"));
  m.preset = j.value("preset", std::string{});
  m.seed = j.value("seed", std::uint64_t{0});
  m.spread = j.value("spread", 0.0);
  m.features_path = j.value("features_path", std::string{});
  if (m.n_classes == 0 || m.dim == 0 || m.train_per_class == 0 || m.test_per_class == 0) {
    throw Error(Errc::validation, "manifest counts and dimension must be positive");
  }
  if (m.source != "synthetic" && m.source != "file") {
    throw Error(Errc::validation, "manifest source must be 'synthetic' or 'file'");
  }
  return m;
}

// ---- files ------------------------------------------------------------------

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::parse, path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j, int indent = 2) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write '" + path + "'");
  out << j.dump(indent) << '\n';
  if (!out) throw Error(Errc::io, "write to '" + path + "' failed");
}

/// Reads run records from a JSON-lines file, one record per non-blank line.
/// With `tolerate_torn_tail`, an unparsable final line (an interrupted write)
/// is dropped instead of raising.
inline std::vector<RunRecord> read_run_records(const std::string& path, std::span<const TaskSpec> base,
                                               bool tolerate_torn_tail = false) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open records file '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(std::move(line));
  }
  std::vector<RunRecord> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(run_record_from_json(Json::parse(lines[i]), base));
    } catch (const std::exception& e) {
      if (tolerate_torn_tail && i + 1 == lines.size()) break;
      throw Error(Errc::parse, path + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace curforge

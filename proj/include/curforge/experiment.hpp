#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "curforge/config.hpp"
#include "curforge/core.hpp"
#include "curforge/data.hpp"
#include "curforge/designer.hpp"
#include "curforge/distance.hpp"
#include "curforge/error.hpp"
#include "curforge/io.hpp"
#include "curforge/learner.hpp"
#include "curforge/parallel.hpp"
#include "curforge/rng.hpp"

namespace curforge {

inline constexpr const char* kRunsFile = "runs.jsonl";
inline constexpr const char* kPartialRunsFile = "runs.jsonl.partial";
inline constexpr const char* kFailuresFile = "failures.jsonl";

struct LoadedDataset {
  Dataset data;
  DatasetManifest manifest;
};

inline DatasetManifest synthetic_manifest(const DatasetConfig& d) {
  DatasetManifest m;
  m.name = d.name;
  m.n_classes = planted_geometry(d.preset, d.spread, d.seed).centers.size();
  m.dim = kPresetDim;
  m.train_per_class = d.train_per_class;
  m.test_per_class = d.test_per_class;
  m.source = "synthetic";
  m.preset = d.preset;
  m.seed = d.seed;
  m.spread = d.spread;
  return m;
}

namespace detail {

inline void require_populated(const Dataset& ds, const std::string& what) {
  for (std::size_t c = 0; c < ds.n_classes(); ++c) {
    if (ds.classes[c].train.empty() || ds.classes[c].test.empty()) {
      throw Error(Errc::validation, what + ": class " + std::to_string(c) + " has no train or test rows");
    }
  }
}

inline LoadedDataset load_file_dataset(const std::string& features, const std::string& manifest_path) {
  auto manifest = manifest_from_json(read_json_file(manifest_path));
  manifest.source = "file";
  manifest.features_path = features;
  auto ds = load_feature_csv(features, manifest);
  require_populated(ds, features);
  return {std::move(ds), std::move(manifest)};
}

}  // namespace detail

inline LoadedDataset load_dataset(const DatasetConfig& d) {
  if (d.source == "synthetic") {
    auto spec = planted_geometry(d.preset, d.spread, d.seed);
    return {generate_synthetic(spec, {d.train_per_class, d.test_per_class}, d.name), synthetic_manifest(d)};
  }
  if (d.source == "file") return detail::load_file_dataset(d.features_path, d.manifest_path);
  throw Error(Errc::config, "dataset source must be 'synthetic' or 'file'");
}

/// Base task list of the experiment in fixed order.
inline std::vector<TaskSpec> experiment_tasks(const ExperimentConfig& cfg, std::size_t n_classes) {
  std::vector<TaskSpec> tasks =
      cfg.paradigm == Paradigm::one_class_tasks ? single_class_tasks(n_classes) : cfg.groups;
  if (const auto issue = validate_curriculum(tasks, n_classes); issue != CurriculumIssue::ok) {
    throw Error(Errc::config, "task groups do not fit the dataset: " + std::string(to_string(issue)));
  }
  if (tasks.size() < 2) throw Error(Errc::config, "an experiment needs at least 2 tasks");
  return tasks;
}

struct DesignerInputs {
  std::vector<Prototype> class_prototypes;
  std::vector<Prototype> task_prototypes;
  DistanceMatrix distances;  // indexed by base task
};

/// Class prototypes from the configured feature source, then one prototype
/// per task (the mean of its class prototypes) and their distance table.
inline DesignerInputs build_designer_inputs(const ExperimentConfig& cfg, const Dataset& ds,
                                            std::span<const TaskSpec> tasks) {
  const Dataset* source = &ds;
  std::optional<LoadedDataset> alt;
  if (!cfg.designer.features_path.empty()) {
    alt = detail::load_file_dataset(cfg.designer.features_path, cfg.designer.manifest_path);
    if (alt->data.n_classes() != ds.n_classes()) {
      throw Error(Errc::validation, "designer features cover a different number of classes");
    }
    source = &alt->data;
  }
  DesignerInputs out;
  for (std::size_t c = 0; c < source->n_classes(); ++c) {
    const auto& rows = source->classes[c].get(cfg.designer.feature_split);
    out.class_prototypes.push_back(compute_prototype(
        rows, cfg.designer.prototype_samples, derive_seed({cfg.master_seed, fnv1a64("prototype"), c}), c));
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    std::vector<Prototype> members;
    for (auto c : tasks[t].classes) members.push_back(out.class_prototypes[c]);
    out.task_prototypes.push_back(task_prototype(members, t));
  }
  out.distances = build_distance_matrix(out.task_prototypes, cfg.designer.metric, cfg.designer.normalize);
  return out;
}

/// Seeds of the random designers, one per repeat.
inline std::uint64_t random_designer_seed(const ExperimentConfig& cfg, std::size_t repeat) {
  return derive_seed({cfg.master_seed, fnv1a64("random-designer"), repeat});
}

inline std::vector<RankedCurricula> random_designers(const ExperimentConfig& cfg, std::span<const Curriculum> curricula) {
  std::vector<RankedCurricula> out;
  out.reserve(cfg.random_repeats);
  for (std::size_t r = 0; r < cfg.random_repeats; ++r) out.push_back(random_rank(curricula, random_designer_seed(cfg, r)));
  return out;
}

/// Training setup of one run. The head initialisation depends only on the
/// seed value, so every curriculum and strategy starts from the same weights;
/// the sampling stream is keyed by (master seed, curriculum, strategy, seed index).
inline TrainConfig run_train_config(const ExperimentConfig& cfg, std::size_t strategy, std::size_t curriculum,
                                    std::size_t seed_index) {
  TrainConfig t = cfg.strategies.at(strategy).train;
  t.seed = cfg.seeds.at(seed_index);
  t.stream_seed = derive_seed({cfg.master_seed, curriculum, fnv1a64(cfg.strategies[strategy].name), seed_index});
  return t;
}

struct RunFailure {
  Curriculum curriculum;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string error;
};

struct RunOptions {
  std::size_t workers = 1;
  std::filesystem::path out_dir;  // empty: keep everything in memory
  bool resume = false;
  bool fail_fast = false;
};

struct ExperimentRuns {
  std::vector<RunRecord> records;  // canonical order: strategy, curriculum, seed
  std::vector<RunFailure> failures;
  std::size_t resumed = 0;
  std::size_t executed = 0;
};

namespace detail {

using RunKey = std::tuple<std::string, std::vector<std::size_t>, std::uint64_t>;

inline RunKey run_key(const RunRecord& r) { return {r.strategy, r.curriculum.order(), r.seed}; }

inline void append_line(std::ofstream& out, const std::string& line, const std::filesystem::path& path) {
  out << line << '\n';
  out.flush();
  if (!out) throw Error(Errc::io, "write to '" + path.string() + "' failed");
}

}  // namespace detail

/// Writes records one JSON object per line, in the given order.
inline void write_run_records(const std::filesystem::path& path, std::span<const RunRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write '" + path.string() + "'");
  for (const auto& r : records) out << run_record_to_json(r).dump() << '\n';
  if (!out) throw Error(Errc::io, "write to '" + path.string() + "' failed");
}

/// Runs every (strategy, curriculum, seed) triple once.
///
/// With an output directory, finished records are appended to
/// runs.jsonl.partial as they complete; at the end runs.jsonl is written in
/// canonical order (so its bytes do not depend on scheduling) and the partial
/// file is removed. With `resume`, triples already present in either file are
/// kept and skipped. A failing run is recorded in failures.jsonl and the rest
/// continue, unless `fail_fast` is set, in which case the first error is rethrown
/// after the partial file has been flushed.
inline ExperimentRuns run_experiment(const ExperimentConfig& cfg, const Dataset& ds, std::span<const TaskSpec> tasks,
                                     const RunOptions& opts) {
  validate_experiment_config(cfg);
  const auto curricula = enumerate_curricula(tasks);
  const std::size_t S = cfg.strategies.size(), C = curricula.size(), K = cfg.seeds.size();

  std::map<detail::RunKey, RunRecord> done;
  const bool to_disk = !opts.out_dir.empty();
  const auto final_path = opts.out_dir / kRunsFile;
  const auto partial_path = opts.out_dir / kPartialRunsFile;
  if (to_disk) std::filesystem::create_directories(opts.out_dir);

  if (opts.resume && to_disk) {
    for (const auto& path : {final_path, partial_path}) {
      if (!std::filesystem::exists(path)) continue;
      for (auto& r : read_run_records(path.string(), tasks, /*tolerate_torn_tail=*/path == partial_path)) {
        if (!record_consistent(r)) throw Error(Errc::validation, path.string() + ": stored metrics do not match acc");
        auto key = detail::run_key(r);
        done.emplace(std::move(key), std::move(r));
      }
    }
  }

  struct Job {
    std::size_t s, c, k;
  };
  std::vector<Job> jobs;
  ExperimentRuns result;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t k = 0; k < K; ++k) {
        if (done.count({cfg.strategies[s].name, curricula[c].order(), cfg.seeds[k]})) {
          ++result.resumed;
        } else {
          jobs.push_back({s, c, k});
        }
      }
    }
  }

  std::ofstream partial;
  if (to_disk) {
    // Restart the partial file from the resumed records so it always holds
    // every finished triple exactly once.
    partial.open(partial_path, std::ios::trunc);
    if (!partial) throw Error(Errc::io, "cannot write '" + partial_path.string() + "'");
    for (const auto& [key, r] : done) detail::append_line(partial, run_record_to_json(r).dump(), partial_path);
  }

  std::vector<std::optional<RunRecord>> fresh(jobs.size());
  std::mutex mu;
  parallel_for(jobs.size(), opts.workers, [&](std::size_t i) {
    const auto& j = jobs[i];
    const auto& strat = cfg.strategies[j.s];
    try {
      auto rec = run_curriculum(ds, curricula[j.c], strat.kind, run_train_config(cfg, j.s, j.c, j.k), strat.name);
      std::lock_guard lock(mu);
      if (to_disk) detail::append_line(partial, run_record_to_json(rec).dump(), partial_path);
      fresh[i] = std::move(rec);
    } catch (const std::exception& e) {
      if (opts.fail_fast) throw;
      std::lock_guard lock(mu);
      result.failures.push_back({curricula[j.c], strat.name, cfg.seeds[j.k], e.what()});
    }
  });

  for (auto& r : fresh) {
    if (!r) continue;
    ++result.executed;
    auto key = detail::run_key(*r);
    done.emplace(std::move(key), std::move(*r));
  }

  // Canonical order: configured strategy order, enumeration order, seed order.
  result.records.reserve(done.size());
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t k = 0; k < K; ++k) {
        auto it = done.find({cfg.strategies[s].name, curricula[c].order(), cfg.seeds[k]});
        if (it != done.end()) result.records.push_back(it->second);
      }
    }
  }
  std::sort(result.failures.begin(), result.failures.end(), [](const RunFailure& a, const RunFailure& b) {
    return std::tie(a.strategy, a.curriculum, a.seed) < std::tie(b.strategy, b.curriculum, b.seed);
  });

  if (to_disk) {
    partial.close();
    write_run_records(final_path, result.records);
    std::filesystem::remove(partial_path);
    const auto failures_path = opts.out_dir / kFailuresFile;
    if (result.failures.empty()) {
      std::filesystem::remove(failures_path);
    } else {
      std::ofstream out(failures_path, std::ios::trunc);
      for (const auto& f : result.failures) {
        out << Json{{"curriculum", curriculum_to_json(f.curriculum)},
                    {"strategy", f.strategy},
                    {"seed", f.seed},
                    {"error", f.error}}
                   .dump()
            << '\n';
      }
    }
  }
  return result;
}

}  // namespace curforge

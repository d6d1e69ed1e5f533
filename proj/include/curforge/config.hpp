#pragma once

#include <toml.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "curforge/core.hpp"
#include "curforge/data.hpp"
#include "curforge/distance.hpp"
#include "curforge/error.hpp"
#include "curforge/learner.hpp"
#include "curforge/stats.hpp"

namespace curforge {

struct DatasetConfig {
  std::string source = "synthetic";  // "synthetic" or "file"
  std::string name = "hub_twin";
  std::string preset = "hub_twin";
  double spread = kDefaultPresetSpread;
  std::uint64_t seed = 0;
  std::size_t train_per_class = 1000;
  std::size_t test_per_class = 200;
  std::string features_path;  // file source: feature CSV
  std::string manifest_path;  // file source: JSON manifest sidecar
};

struct DesignerConfig {
  Metric metric = Metric::cosine;
  bool normalize = true;
  std::size_t prototype_samples = 500;
  Split feature_split = Split::train;
  // Optional alternate feature source for prototypes only (same class ids as the dataset).
  std::string features_path;
  std::string manifest_path;
};

struct StrategyConfig {
  std::string name;
  StrategyKind kind = StrategyKind::vanilla;
  TrainConfig train;
};

enum class Paradigm { one_class_tasks, grouped_tasks };

constexpr std::string_view to_string(Paradigm p) noexcept {
  return p == Paradigm::one_class_tasks ? "one-class-tasks" : "grouped-tasks";
}

struct ExperimentConfig {
  DatasetConfig dataset;
  DesignerConfig designer;
  std::vector<StrategyConfig> strategies;  // sorted by name
  Paradigm paradigm = Paradigm::one_class_tasks;
  std::vector<TaskSpec> groups;  // grouped-tasks only
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::uint64_t master_seed = 0;
  std::size_t random_repeats = 100;
  std::size_t k_max = 30;
  std::size_t tiers = 5;
  std::size_t top_bottom_k = 10;
  TTestKind ttest = TTestKind::welch;
  std::vector<std::string> recall_strategies;  // empty: every non-replay strategy
  std::size_t workers = 1;
  std::string out_dir = "out";
  bool fail_fast = false;
  std::string source_text;  // raw config text, hashed into report provenance

  const StrategyConfig* find_strategy(std::string_view name) const {
    for (const auto& s : strategies) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }
};

inline std::vector<StrategyConfig> standard_strategies(const TrainConfig& shared = {}) {
  std::vector<StrategyConfig> out;
  for (auto k : {StrategyKind::ewc, StrategyKind::lwf, StrategyKind::replay, StrategyKind::vanilla}) {
    out.push_back({std::string(to_string(k)), k, shared});
  }
  return out;
}

/// The hub_twin synthetic setup with all four strategies and library defaults.
inline ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.strategies = standard_strategies();
  return cfg;
}

inline void validate_experiment_config(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw Error(Errc::config, "at least one seed is required");
  {
    auto s = cfg.seeds;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw Error(Errc::config, "seeds must be distinct");
  }
  if (cfg.strategies.empty()) throw Error(Errc::config, "at least one strategy is required");
  for (std::size_t i = 0; i < cfg.strategies.size(); ++i) {
    validate_train_config(cfg.strategies[i].train);
    if (i > 0 && !(cfg.strategies[i - 1].name < cfg.strategies[i].name)) {
      throw Error(Errc::config, "strategy names must be distinct and sorted");
    }
  }
  for (const auto& r : cfg.recall_strategies) {
    if (!cfg.find_strategy(r)) throw Error(Errc::config, "recall strategy '" + r + "' is not configured");
  }
  if (cfg.random_repeats == 0) throw Error(Errc::config, "random_repeats must be >= 1");
  if (cfg.k_max == 0) throw Error(Errc::config, "k_max must be >= 1");
  if (cfg.tiers == 0) throw Error(Errc::config, "tiers must be >= 1");
  if (cfg.top_bottom_k < 2) throw Error(Errc::config, "top_bottom_k must be >= 2");
  if (cfg.workers == 0) throw Error(Errc::config, "workers must be >= 1");
  if (cfg.designer.prototype_samples == 0) throw Error(Errc::config, "prototype_samples must be >= 1");
  if (cfg.dataset.source == "synthetic") {
    if (cfg.dataset.train_per_class == 0 || cfg.dataset.test_per_class == 0) {
      throw Error(Errc::config, "sample counts must be positive");
    }
  } else if (cfg.dataset.source == "file") {
    if (cfg.dataset.features_path.empty() || cfg.dataset.manifest_path.empty()) {
      throw Error(Errc::config, "file datasets need 'features' and 'manifest' paths");
    }
  } else {
    throw Error(Errc::config, "dataset source must be 'synthetic' or 'file'");
  }
  if (cfg.paradigm == Paradigm::grouped_tasks) {
    if (cfg.groups.size() < 2) throw Error(Errc::config, "grouped-tasks needs at least 2 groups");
    try {
      require_disjoint_tasks(cfg.groups);
    } catch (const Error& e) {
      throw Error(Errc::config, std::string("[experiment] groups: ") + e.what());
    }
  }
}

namespace detail {

// Reads keys from one TOML table and rejects keys nobody asked for, so typos
// surface as errors instead of silently falling back to defaults.
class TomlSection {
 public:
  TomlSection(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool present() const noexcept { return table_ != nullptr; }

  std::optional<std::string> str(std::string_view key) { return typed<std::string>(key, "a string"); }
  std::optional<bool> boolean(std::string_view key) { return typed<bool>(key, "a boolean"); }

  std::optional<double> number(std::string_view key) {
    const auto* n = lookup(key);
    if (!n) return std::nullopt;
    if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return v;
    throw bad_type(key, "a number");
  }

  std::optional<std::uint64_t> uint(std::string_view key) {
    const auto* n = lookup(key);
    if (!n) return std::nullopt;
    return to_uint(*n, key);
  }

  std::optional<std::vector<std::uint64_t>> uint_array(std::string_view key) {
    const auto* n = lookup(key);
    if (!n) return std::nullopt;
    const auto* arr = n->as_array();
    if (!arr) throw bad_type(key, "an array of integers");
    std::vector<std::uint64_t> out;
    for (const auto& e : *arr) out.push_back(to_uint(e, key));
    return out;
  }

  std::optional<std::vector<std::string>> str_array(std::string_view key) {
    const auto* n = lookup(key);
    if (!n) return std::nullopt;
    const auto* arr = n->as_array();
    if (!arr) throw bad_type(key, "an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *arr) {
      auto v = e.value<std::string>();
      if (!v) throw bad_type(key, "an array of strings");
      out.push_back(*v);
    }
    return out;
  }

  std::optional<std::vector<TaskSpec>> groups(std::string_view key) {
    const auto* n = lookup(key);
    if (!n) return std::nullopt;
    const auto* arr = n->as_array();
    if (!arr) throw bad_type(key, "an array of class-id arrays");
    std::vector<TaskSpec> out;
    for (const auto& g : *arr) {
      const auto* inner = g.as_array();
      if (!inner) throw bad_type(key, "an array of class-id arrays");
      TaskSpec t;
      for (const auto& c : *inner) t.classes.push_back(static_cast<ClassId>(to_uint(c, key)));
      out.push_back(std::move(t));
    }
    return out;
  }

  /// Sub-tables of this table, by name; marks them as consumed.
  std::vector<std::pair<std::string, const toml::table*>> subtables() {
    std::vector<std::pair<std::string, const toml::table*>> out;
    if (!table_) return out;
    for (const auto& [k, v] : *table_) {
      if (const auto* t = v.as_table()) {
        out.emplace_back(std::string(k.str()), t);
        used_.insert(std::string(k.str()));
      }
    }
    return out;
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!used_.count(std::string(k.str()))) {
        throw Error(Errc::config, "unknown key '" + std::string(k.str()) + "' in [" + name_ + "]");
      }
    }
  }

 private:
  const toml::node* lookup(std::string_view key) {
    if (!table_) return nullptr;
    used_.insert(std::string(key));
    return table_->get(key);
  }

  template <typename T>
  std::optional<T> typed(std::string_view key, const char* what) {
    const auto* n = lookup(key);
    if (!n) return std::nullopt;
    if (auto v = n->value_exact<T>()) return v;
    throw bad_type(key, what);
  }

  std::uint64_t to_uint(const toml::node& n, std::string_view key) const {
    const auto v = n.value_exact<std::int64_t>();
    if (!v || *v < 0) throw bad_type(key, "a non-negative integer");
    return static_cast<std::uint64_t>(*v);
  }

  Error bad_type(std::string_view key, const char* what) const {
    return Error(Errc::config, "[" + name_ + "] " + std::string(key) + " must be " + what);
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base_dir) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path.string();
  return (base_dir / path).lexically_normal().string();
}

// Learner keys shared by [learner] and [learner.<name>]; later calls override.
inline void read_train_keys(TomlSection& s, TrainConfig& t) {
  if (auto v = s.uint("epochs")) t.epochs = *v;
  if (auto v = s.uint("batch_size")) t.batch_size = *v;
  if (auto v = s.number("lr")) t.adam.lr = *v;
  if (auto v = s.number("beta1")) t.adam.beta1 = *v;
  if (auto v = s.number("beta2")) t.adam.beta2 = *v;
  if (auto v = s.number("eps")) t.adam.eps = *v;
  if (auto v = s.number("ewc_lambda")) t.ewc_lambda = *v;
  if (auto v = s.number("lwf_lambda")) t.lwf_lambda = *v;
  if (auto v = s.number("lwf_temperature")) t.lwf_temperature = *v;
  if (auto v = s.number("buffer_fraction")) t.buffer_fraction = *v;
  if (auto v = s.str("buffer_policy")) t.buffer_policy = buffer_policy_from_string(*v);
  if (auto v = s.boolean("shuffle_within_task")) t.shuffle_within_task = *v;
  if (auto v = s.str("init")) t.init = init_family_from_string(*v);
}

}  // namespace detail

/// Parses a TOML experiment description. Relative file paths are resolved
/// against `base_dir`. Sections: [dataset], [designer], [learner] (shared
/// training keys) with one [learner.<name>] table per strategy, and
/// [experiment]. Without any [learner.<name>] table the four standard
/// strategies are used.
inline ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "line " << e.source().begin.line << ": " << e.description();
    throw Error(Errc::config, msg.str());
  }

  ExperimentConfig cfg;
  cfg.source_text = std::string(text);

  try {
    detail::TomlSection top(&root, "");
    for (const auto& [name, table] : top.subtables()) {
      if (name != "dataset" && name != "designer" && name != "learner" && name != "experiment") {
        throw Error(Errc::config, "unknown section [" + name + "]");
      }
    }
    top.reject_unknown();

    detail::TomlSection ds(root["dataset"].as_table(), "dataset");
    auto& d = cfg.dataset;
    if (auto v = ds.str("source")) d.source = *v;
    if (auto v = ds.str("preset")) d.preset = *v;
    d.name = ds.str("name").value_or(d.source == "synthetic" ? d.preset : std::string("features"));
    if (auto v = ds.number("spread")) d.spread = *v;
    if (auto v = ds.uint("seed")) d.seed = *v;
    if (auto v = ds.uint("train_per_class")) d.train_per_class = *v;
    if (auto v = ds.uint("test_per_class")) d.test_per_class = *v;
    if (auto v = ds.str("features")) d.features_path = detail::resolve_path(*v, base_dir);
    if (auto v = ds.str("manifest")) d.manifest_path = detail::resolve_path(*v, base_dir);
    ds.reject_unknown();

    detail::TomlSection de(root["designer"].as_table(), "designer");
    auto& g = cfg.designer;
    if (auto v = de.str("metric")) g.metric = metric_from_string(*v);
    if (auto v = de.boolean("normalize")) g.normalize = *v;
    if (auto v = de.uint("prototype_samples")) g.prototype_samples = *v;
    if (auto v = de.str("feature_split")) {
      if (*v == "train") {
        g.feature_split = Split::train;
      } else if (*v == "test") {
        g.feature_split = Split::test;
      } else {
        throw Error(Errc::config, "[designer] feature_split must be 'train' or 'test'");
      }
    }
    if (auto v = de.str("features")) g.features_path = detail::resolve_path(*v, base_dir);
    if (auto v = de.str("manifest")) g.manifest_path = detail::resolve_path(*v, base_dir);
    if (g.features_path.empty() != g.manifest_path.empty()) {
      throw Error(Errc::config, "[designer] features and manifest must be given together");
    }
    de.reject_unknown();

    detail::TomlSection le(root["learner"].as_table(), "learner");
    TrainConfig shared;
    auto strategy_tables = le.subtables();
    detail::read_train_keys(le, shared);
    le.reject_unknown();
    if (strategy_tables.empty()) {
      cfg.strategies = standard_strategies(shared);
    } else {
      for (const auto& [name, table] : strategy_tables) {
        detail::TomlSection st(table, "learner." + name);
        StrategyConfig sc{name, StrategyKind::vanilla, shared};
        sc.kind = strategy_kind_from_string(st.str("kind").value_or(name));
        detail::read_train_keys(st, sc.train);
        st.reject_unknown();
        cfg.strategies.push_back(std::move(sc));
      }
      std::sort(cfg.strategies.begin(), cfg.strategies.end(),
                [](const auto& a, const auto& b) { return a.name < b.name; });
    }

    detail::TomlSection ex(root["experiment"].as_table(), "experiment");
    if (auto v = ex.str("paradigm")) {
      if (*v == "one-class-tasks") {
        cfg.paradigm = Paradigm::one_class_tasks;
      } else if (*v == "grouped-tasks") {
        cfg.paradigm = Paradigm::grouped_tasks;
      } else {
        throw Error(Errc::config, "[experiment] paradigm must be 'one-class-tasks' or 'grouped-tasks'");
      }
    }
    if (auto v = ex.groups("groups")) cfg.groups = *v;
    if (cfg.paradigm == Paradigm::one_class_tasks && !cfg.groups.empty()) {
      throw Error(Errc::config, "[experiment] groups need paradigm = \"grouped-tasks\"");
    }
    if (auto v = ex.uint_array("seeds")) cfg.seeds = *v;
    if (auto v = ex.uint("master_seed")) cfg.master_seed = *v;
    if (auto v = ex.uint("random_repeats")) cfg.random_repeats = *v;
    if (auto v = ex.uint("k_max")) cfg.k_max = *v;
    if (auto v = ex.uint("tiers")) cfg.tiers = *v;
    if (auto v = ex.uint("top_bottom_k")) cfg.top_bottom_k = *v;
    if (auto v = ex.str("ttest")) {
      if (*v == "welch") {
        cfg.ttest = TTestKind::welch;
      } else if (*v == "pooled") {
        cfg.ttest = TTestKind::pooled;
      } else {
        throw Error(Errc::config, "[experiment] ttest must be 'welch' or 'pooled'");
      }
    }
    if (auto v = ex.str_array("recall_strategies")) cfg.recall_strategies = *v;
    if (auto v = ex.uint("workers")) cfg.workers = *v;
    if (auto v = ex.str("out")) cfg.out_dir = detail::resolve_path(*v, base_dir);
    if (auto v = ex.boolean("fail_fast")) cfg.fail_fast = *v;
    ex.reject_unknown();
  } catch (const Error& e) {
    if (e.code() == Errc::config) throw;
    throw Error(Errc::config, e.what());
  }

  validate_experiment_config(cfg);
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_experiment_config(buf.str(), std::filesystem::path(path).parent_path());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

}  // namespace curforge

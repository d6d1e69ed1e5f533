#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "curforge/analysis.hpp"
#include "curforge/config.hpp"
#include "curforge/experiment.hpp"
#include "curforge/io.hpp"

namespace fs = std::filesystem;
using namespace curforge;

namespace {

struct Common {
  std::string config;
  std::string out;
};

ExperimentConfig load_config(const Common& c) {
  return c.config.empty() ? default_experiment_config() : load_experiment_config(c.config);
}

fs::path out_dir(const Common& c, const ExperimentConfig& cfg) { return c.out.empty() ? fs::path(cfg.out_dir) : fs::path(c.out); }

// Precedence: --workers, then CURFORGE_WORKERS, then the config file.
std::size_t resolve_workers(std::optional<std::size_t> flag, std::size_t configured) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CURFORGE_WORKERS"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || v == 0) throw Error(Errc::config, "CURFORGE_WORKERS must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return configured;
}

struct Pipeline {
  ExperimentConfig cfg;
  LoadedDataset data;
  std::vector<TaskSpec> tasks;
};

Pipeline open_pipeline(const Common& c) {
  Pipeline p{load_config(c), {}, {}};
  p.data = load_dataset(p.cfg.dataset);
  p.tasks = experiment_tasks(p.cfg, p.data.data.n_classes());
  return p;
}

RankedCurricula designer_ranking(const Pipeline& p) {
  const auto inputs = build_designer_inputs(p.cfg, p.data.data, p.tasks);
  return rank_all(p.tasks, inputs.distances, {RankOptions{}.max_curricula, p.cfg.workers});
}

int cmd_gen(const Common& c, const std::optional<std::string>& preset, const std::optional<std::size_t>& train,
            const std::optional<std::size_t>& test, const std::optional<double>& spread,
            const std::optional<std::uint64_t>& seed) {
  auto cfg = load_config(c);
  auto& d = cfg.dataset;
  if (d.source != "synthetic") throw Error(Errc::config, "gen needs a synthetic dataset");
  if (preset) d.name = d.preset = *preset;
  if (train) d.train_per_class = *train;
  if (test) d.test_per_class = *test;
  if (spread) d.spread = *spread;
  if (seed) d.seed = *seed;
  const auto loaded = load_dataset(d);
  const auto dir = out_dir(c, cfg);
  fs::create_directories(dir);
  save_feature_csv((dir / "features.csv").string(), loaded.data);
  auto manifest = loaded.manifest;
  manifest.features_path = "features.csv";
  write_json_file((dir / "manifest.json").string(), manifest_to_json(manifest));
  std::cerr << "wrote " << (dir / "features.csv").string() << " (" << loaded.data.n_classes() << " classes, dim "
            << loaded.data.dim << ")\n";
  return 0;
}

int cmd_prototypes(const Common& c) {
  const auto p = open_pipeline(c);
  const auto inputs = build_designer_inputs(p.cfg, p.data.data, p.tasks);
  const auto dir = out_dir(c, p.cfg);
  fs::create_directories(dir);
  write_json_file((dir / "prototypes.json").string(),
                  Json{{"classes", prototypes_to_json(inputs.class_prototypes)},
                       {"tasks", prototypes_to_json(inputs.task_prototypes)}});
  write_json_file((dir / "distance.json").string(), distance_matrix_to_json(inputs.distances));
  std::cerr << "wrote " << (dir / "prototypes.json").string() << " and " << (dir / "distance.json").string() << '\n';
  return 0;
}

int cmd_rank(const Common& c) {
  const auto p = open_pipeline(c);
  const auto cd = designer_ranking(p);
  if (c.out.empty()) {
    std::cout << ranking_to_json(cd).dump(2) << '\n';
    return 0;
  }
  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_json_file((dir / "rank_designer.json").string(), ranking_to_json(cd));
  Json randoms = Json::array();
  const auto curricula = enumerate_curricula(p.tasks);
  for (std::size_t r = 0; r < p.cfg.random_repeats; ++r) {
    const auto seed = random_designer_seed(p.cfg, r);
    randoms.push_back({{"seed", seed}, {"ranking", ranking_to_json(random_rank(curricula, seed))}});
  }
  write_json_file((dir / "rank_random.json").string(), randoms, -1);
  std::cerr << "ranked " << cd.size() << " curricula; top " << curriculum_to_string(cd.entries.front().curriculum)
            << " (s = " << cd.entries.front().score << ")\n";
  return 0;
}

int cmd_run(const Common& c, std::optional<std::size_t> workers, bool resume, bool fail_fast) {
  const auto p = open_pipeline(c);
  RunOptions opts;
  opts.workers = resolve_workers(workers, p.cfg.workers);
  opts.out_dir = out_dir(c, p.cfg);
  opts.resume = resume;
  opts.fail_fast = fail_fast || p.cfg.fail_fast;
  const auto res = run_experiment(p.cfg, p.data.data, p.tasks, opts);
  std::cerr << res.records.size() << " run records (" << res.executed << " run, " << res.resumed
            << " resumed) in " << (opts.out_dir / kRunsFile).string() << '\n';
  if (!res.failures.empty()) {
    std::cerr << "error: " << res.failures.size() << " runs failed; see "
              << (opts.out_dir / kFailuresFile).string() << '\n';
    for (std::size_t i = 0; i < std::min<std::size_t>(res.failures.size(), 5); ++i) {
      const auto& f = res.failures[i];
      std::cerr << "  " << f.strategy << " " << curriculum_to_string(f.curriculum) << " seed " << f.seed << ": "
                << f.error << '\n';
    }
    return 1;
  }
  return 0;
}

Json build_report(const Pipeline& p, const std::string& records_path) {
  const auto records = read_run_records(records_path, p.tasks);
  if (records.empty()) throw Error(Errc::empty_input, "records file '" + records_path + "' contains no run records");
  const auto analysis = analyze_records(p.cfg, p.tasks, designer_ranking(p), records);
  return analysis_to_json(analysis, p.cfg, p.tasks);
}

int cmd_analyze(const Common& c, const std::string& records_flag, bool verify) {
  const auto p = open_pipeline(c);
  const auto dir = out_dir(c, p.cfg);
  const std::string records = records_flag.empty() ? (dir / kRunsFile).string() : records_flag;
  const auto report = build_report(p, records);
  fs::create_directories(dir);
  const auto report_path = (dir / "report.json").string();
  write_json_file(report_path, report);
  std::cerr << "wrote " << report_path << '\n';
  if (verify) {
    const auto stored = read_json_file(report_path);
    const auto fresh = build_report(p, records);
    if (report_body(stored) != report_body(fresh)) {
      throw Error(Errc::validation, "report does not match a recomputation from " + records);
    }
    std::cerr << "verify: report matches a fresh recomputation from the stored records\n";
  }
  return 0;
}

void write_csv(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write '" + path.string() + "'");
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

std::string num(const Json& j) { return j.is_null() ? "" : j.dump(); }

int cmd_report(const Common& c) {
  const auto p = open_pipeline(c);
  const auto dir = out_dir(c, p.cfg);
  const auto report = read_json_file((dir / "report.json").string());
  const auto records = read_run_records((dir / kRunsFile).string(), p.tasks);
  const auto csv = dir / "csv";
  fs::create_directories(csv);

  std::vector<std::string> rows;
  for (const auto& r : records) {
    rows.push_back(r.strategy + "," + curriculum_to_string(r.curriculum) + "," + std::to_string(r.seed) + "," +
                   Json(r.alpha).dump() + "," + Json(r.beta).dump() + "," + Json(r.f).dump());
  }
  write_csv(csv / "alpha_beta.csv", "strategy,curriculum,seed,alpha,beta,f", rows);

  rows.clear();
  for (const auto& e : report.at("recall_at_k").at("curve")) {
    rows.push_back(num(e.at("k")) + "," + num(e.at("designer")) + "," + num(e.at("random_mean")));
  }
  write_csv(csv / "recall_at_k.csv", "k,designer,random_mean", rows);

  rows.clear();
  const auto& h = report.at("discrepancy_h");
  for (const auto& e : h.at("between_algorithms")) {
    rows.push_back("between," + e.at("a").get<std::string>() + "," + e.at("b").get<std::string>() + "," + num(e.at("h")));
  }
  for (const auto& [name, v] : h.at("algorithm_designer").items()) rows.push_back("designer," + name + ",designer," + num(v));
  for (const auto& [name, v] : h.at("algorithm_random_mean").items()) rows.push_back("random," + name + ",random," + num(v));
  write_csv(csv / "discrepancy_h.csv", "kind,a,b,h", rows);

  rows.clear();
  const auto& sp = report.at("spearman");
  for (const auto& e : sp.at("between_algorithms")) {
    rows.push_back("between," + e.at("a").get<std::string>() + "," + e.at("b").get<std::string>() + "," + num(e.at("rho")));
  }
  for (const auto& [name, v] : sp.at("algorithm_designer").items()) rows.push_back("designer," + name + ",designer," + num(v));
  for (const auto& [name, v] : sp.at("algorithm_random_mean").items()) rows.push_back("random," + name + ",random," + num(v));
  write_csv(csv / "spearman.csv", "kind,a,b,rho", rows);

  rows.clear();
  std::vector<std::string> fot, ranking;
  const auto& base_r = report.at("f_over_time").at("random_baseline");
  const auto& base_o = report.at("f_over_time").at("overfitting_baseline");
  for (const auto& [name, s] : report.at("strategies").items()) {
    const auto& tb = s.at("top_vs_bottom");
    const auto& t = tb.at("test");
    rows.push_back(name + "," + num(tb.at("k")) + "," + num(tb.at("top_mean")) + "," + num(tb.at("bottom_mean")) + "," +
                   (t.is_null() ? ",," : num(t.at("t")) + "," + num(t.at("df")) + "," + num(t.at("p"))));
    const auto& f = s.at("f_over_time");
    for (std::size_t i = 0; i < f.size(); ++i) {
      fot.push_back(name + "," + std::to_string(i + 1) + "," + num(f[i]) + "," + num(base_r.at(i)) + "," +
                    num(base_o.at(i)));
    }
    for (const auto& e : s.at("ranking")) {
      ranking.push_back(name + "," + num(e.at("rank")) + "," + e.at("letters").get<std::string>() + "," +
                        num(e.at("score")) + "," + num(e.at("tier")));
    }
  }
  for (const auto& e : report.at("designer").at("ranking")) {
    ranking.push_back("designer," + num(e.at("rank")) + "," + e.at("letters").get<std::string>() + "," +
                      num(e.at("score")) + "," + num(e.at("tier")));
  }
  write_csv(csv / "ttest.csv", "strategy,k,top_mean,bottom_mean,t,df,p", rows);
  write_csv(csv / "f_over_time.csv", "strategy,step,f,random_baseline,overfitting_baseline", fot);
  write_csv(csv / "rankings.csv", "source,rank,curriculum,score,tier", ranking);
  std::cerr << "wrote CSV exports to " << csv.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curforge: curriculum design and evaluation for class-incremental learning"};
  app.set_version_flag("--version", std::string(CURFORGE_VERSION));
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "TOML experiment configuration (default: built-in hub_twin setup)");
    sub->add_option("--out", common.out, "Output directory (default: [experiment] out)");
  };

  std::optional<std::string> preset;
  std::optional<std::size_t> train, test;
  std::optional<double> spread;
  std::optional<std::uint64_t> seed;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic feature dataset (features.csv + manifest.json)");
  add_common(gen);
  gen->add_option("--preset", preset, "Geometry preset: hub, twin or hub_twin");
  gen->add_option("--train", train, "Training vectors per class");
  gen->add_option("--test", test, "Test vectors per class");
  gen->add_option("--spread", spread, "Isotropic standard deviation");
  gen->add_option("--seed", seed, "Generator seed");

  auto* protos = app.add_subcommand("prototypes", "Compute class/task prototypes and the distance matrix");
  add_common(protos);

  auto* rank = app.add_subcommand("rank", "Rank all curricula with the designer and the random designers");
  add_common(rank);

  std::optional<std::size_t> workers;
  bool resume = false, fail_fast = false;
  auto* run = app.add_subcommand("run", "Train every strategy on every curriculum and seed");
  add_common(run);
  run->add_option("--workers", workers, "Parallel runs (overrides CURFORGE_WORKERS and the config)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--resume", resume, "Skip runs already present in the output directory");
  run->add_flag("--fail-fast", fail_fast, "Stop at the first failing run");

  std::string records;
  bool verify = false;
  auto* analyze = app.add_subcommand("analyze", "Compute rankings, Recall@K, H, Spearman and t-tests from run records");
  add_common(analyze);
  analyze->add_option("--records", records, "Run-record file (default: <out>/runs.jsonl)");
  analyze->add_flag("--verify", verify, "Check the written report against a fresh recomputation");

  auto* report = app.add_subcommand("report", "Export CSV tables from report.json and runs.jsonl");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*gen) return cmd_gen(common, preset, train, test, spread, seed);
    if (*protos) return cmd_prototypes(common);
    if (*rank) return cmd_rank(common);
    if (*run) return cmd_run(common, workers, resume, fail_fast);
    if (*analyze) return cmd_analyze(common, records, verify);
    if (*report) return cmd_report(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

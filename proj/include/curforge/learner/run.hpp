#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "curforge/core.hpp"
#include "curforge/data.hpp"
#include "curforge/error.hpp"
#include "curforge/learner/adam.hpp"
#include "curforge/learner/head.hpp"
#include "curforge/learner/strategy.hpp"
#include "curforge/metrics.hpp"
#include "curforge/rng.hpp"

namespace curforge {

struct TrainConfig {
  std::size_t epochs = 1;  // 1 is the online single-pass setting
  std::size_t batch_size = 32;
  AdamConfig adam{};
  double ewc_lambda = 100.0;
  double lwf_lambda = 1.0;
  double lwf_temperature = 2.0;
  double buffer_fraction = 0.1;
  BufferPolicy buffer_policy = BufferPolicy::per_task;
  bool shuffle_within_task = false;
  InitFamily init = InitFamily::gaussian;
  std::uint64_t seed = 0;         // initial head; shared by every curriculum run with this seed
  std::uint64_t stream_seed = 0;  // replay sampling and optional shuffling
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs == 0) throw Error(Errc::config, "epochs must be >= 1");
  if (cfg.batch_size == 0) throw Error(Errc::config, "batch_size must be >= 1");
  if (!(cfg.adam.lr > 0.0)) throw Error(Errc::config, "lr must be positive");
  if (!(cfg.buffer_fraction > 0.0 && cfg.buffer_fraction <= 1.0)) {
    throw Error(Errc::config, "buffer_fraction must be in (0,1]");
  }
  if (!(cfg.lwf_temperature > 0.0)) throw Error(Errc::config, "LwF temperature must be positive");
  if (cfg.ewc_lambda < 0.0 || cfg.lwf_lambda < 0.0) throw Error(Errc::config, "regularizer weights must be >= 0");
}

/// Index batches over n examples for all epochs. Without shuffling every epoch
/// walks the examples in stored order; each epoch covers each index exactly once.
inline std::vector<std::vector<std::size_t>> plan_batches(std::size_t n, std::size_t batch_size, std::size_t epochs,
                                                          bool shuffle, Rng& rng) {
  std::vector<std::vector<std::size_t>> plan;
  std::vector<std::size_t> idx(n);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (shuffle) std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const auto end = std::min(n, start + batch_size);
      plan.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return plan;
}

inline StrategyState make_strategy_state(StrategyKind kind, const TrainConfig& cfg, std::size_t replay_cap) {
  switch (kind) {
    case StrategyKind::vanilla: return VanillaState{};
    case StrategyKind::ewc: return EwcState{cfg.ewc_lambda, {}};
    case StrategyKind::lwf: return LwfState{cfg.lwf_lambda, cfg.lwf_temperature, std::nullopt, {}};
    case StrategyKind::replay:
      return ReplayState{ReplayBuffer(replay_cap, derive_seed({cfg.stream_seed, 0xb0ffULL}))};
  }
  throw Error(Errc::invalid_argument, "unknown strategy");
}

/// Trains a fresh head on the curriculum task by task and records the
/// accuracy on every seen task's test split after each task.
///
/// Per task: LwF snapshots the head, the task's training stream is batched
/// (`epochs` passes; one Adam step per batch), replay appends as many buffer
/// samples as the batch has new ones, then all seen tasks are evaluated with
/// argmax over seen classes. EWC consolidates and replay stores examples after
/// evaluation.
inline RunRecord run_curriculum(const Dataset& ds, const Curriculum& c, StrategyKind kind, const TrainConfig& cfg,
                                std::string strategy_name = {}) {
  validate_train_config(cfg);
  if (strategy_name.empty()) strategy_name = std::string(to_string(kind));
  const std::size_t n = ds.n_classes();
  if (const auto issue = validate_curriculum(c, n); issue != CurriculumIssue::ok) {
    throw Error(Errc::validation, "curriculum does not fit dataset: " + std::string(to_string(issue)));
  }

  const std::size_t T = c.size();
  std::vector<std::vector<Sample>> train(T), test(T);
  std::vector<std::size_t> counts(T);
  std::size_t total_train = 0;
  for (std::size_t t = 0; t < T; ++t) {
    train[t] = task_samples(ds, c.tasks()[t], Split::train);
    test[t] = task_samples(ds, c.tasks()[t], Split::test);
    counts[t] = c.tasks()[t].classes.size();
    if (train[t].empty() || test[t].empty()) {
      throw Error(Errc::empty_input, "task " + std::to_string(t) + " has no train or test samples");
    }
    total_train += train[t].size();
  }

  HeadParams head = init_head(n, ds.dim, cfg.init, cfg.seed);
  AdamState adam = AdamState::for_head(head, cfg.adam);
  Rng stream(derive_seed({cfg.stream_seed, 0x5eedULL}));
  const std::size_t cap =
      kind == StrategyKind::replay ? replay_capacity(cfg.buffer_policy, cfg.buffer_fraction, total_train, T) : 1;
  StrategyState state = make_strategy_state(kind, cfg, cap);

  ClassMask seen(n, false);
  AccuracyMatrix acc(counts);

  for (std::size_t t = 0; t < T; ++t) {
    try {
      if (auto* lwf = std::get_if<LwfState>(&state); lwf && t > 0) {
        lwf->snapshot = head;
        lwf->old_classes = seen;
      }
      for (auto k : c.tasks()[t].classes) seen[k] = true;

      auto* replay = std::get_if<ReplayState>(&state);
      for (const auto& idx : plan_batches(train[t].size(), cfg.batch_size, cfg.epochs, cfg.shuffle_within_task, stream)) {
        Batch batch;
        batch.reserve(2 * idx.size());
        for (auto i : idx) batch.push_back(&train[t][i]);
        if (replay && !replay->buffer.empty()) {
          const auto extra = replay->buffer.draw(idx.size());
          batch.insert(batch.end(), extra.begin(), extra.end());
        }
        const auto lg = loss_and_grad(head, batch, seen, state);
        adam_step(head, lg.grad, adam);
      }

      std::vector<double> row(t + 1);
      for (std::size_t j = 0; j <= t; ++j) row[j] = evaluate_accuracy(head, test[j], seen);
      acc.set_row(t, std::move(row));

      if (auto* ewc = std::get_if<EwcState>(&state)) {
        ewc->anchors.push_back(consolidate_ewc(head, train[t], seen, ewc->lambda));
      }
      if (replay) replay->buffer.add(train[t]);
    } catch (const Error& e) {
      throw Error(e.code(), "task " + std::to_string(t) + ": " + e.what());
    }
  }
  return make_run_record(c, std::move(strategy_name), cfg.seed, std::move(acc));
}

}  // namespace curforge

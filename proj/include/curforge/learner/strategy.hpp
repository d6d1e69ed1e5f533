#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "curforge/data.hpp"
#include "curforge/error.hpp"
#include "curforge/learner/head.hpp"
#include "curforge/rng.hpp"

namespace curforge {

enum class StrategyKind { vanilla, ewc, lwf, replay };

constexpr std::string_view to_string(StrategyKind k) noexcept {
  switch (k) {
    case StrategyKind::vanilla: return "vanilla";
    case StrategyKind::ewc: return "ewc";
    case StrategyKind::lwf: return "lwf";
    case StrategyKind::replay: return "replay";
  }
  return "unknown";
}

inline StrategyKind strategy_kind_from_string(std::string_view s) {
  if (s == "vanilla") return StrategyKind::vanilla;
  if (s == "ewc") return StrategyKind::ewc;
  if (s == "lwf") return StrategyKind::lwf;
  if (s == "replay") return StrategyKind::replay;
  throw Error(Errc::invalid_argument, "unknown strategy '" + std::string(s) + "'");
}

/// Parameters and diagonal Fisher captured at the end of one task.
struct EwcAnchor {
  HeadParams theta;
  HeadParams fisher;
  double lambda = 0.0;
};

struct VanillaState {};

struct EwcState {
  double lambda = 100.0;
  std::vector<EwcAnchor> anchors;
};

struct LwfState {
  double lambda = 1.0;
  double temperature = 2.0;
  std::optional<HeadParams> snapshot;  // head as it was before the current task
  ClassMask old_classes;               // classes seen before the current task
};

enum class BufferPolicy { global_fixed, per_task };

constexpr std::string_view to_string(BufferPolicy p) noexcept {
  return p == BufferPolicy::global_fixed ? "global-fixed" : "per-task";
}

inline BufferPolicy buffer_policy_from_string(std::string_view s) {
  if (s == "global-fixed") return BufferPolicy::global_fixed;
  if (s == "per-task") return BufferPolicy::per_task;
  throw Error(Errc::invalid_argument, "unknown buffer policy '" + std::string(s) + "'");
}

/// Fixed-capacity memory of past examples kept as a uniform sample of every
/// example offered so far (reservoir sampling).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity_ == 0) throw Error(Errc::invalid_argument, "replay buffer capacity must be >= 1");
  }

  void add(std::span<const Sample> examples) {
    for (const auto& s : examples) {
      ++offered_;
      if (items_.size() < capacity_) {
        items_.push_back(s);
        continue;
      }
      std::uniform_int_distribution<std::size_t> pick(0, offered_ - 1);
      const auto j = pick(rng_);
      if (j < capacity_) items_[j] = s;
    }
  }

  /// Up to `k` distinct buffered examples, chosen uniformly.
  std::vector<const Sample*> draw(std::size_t k) {
    k = std::min(k, items_.size());
    std::vector<const Sample*> out;
    out.reserve(k);
    std::vector<std::size_t> idx(items_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // partial Fisher-Yates
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng_)]);
      out.push_back(&items_[idx[i]]);
    }
    return out;
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t offered() const noexcept { return offered_; }
  bool empty() const noexcept { return items_.empty(); }
  const std::vector<Sample>& items() const noexcept { return items_; }

 private:
  std::size_t capacity_;
  std::size_t offered_ = 0;
  std::vector<Sample> items_;
  Rng rng_;
};

/// Buffer size for a run. global-fixed: fraction of the whole training set;
/// per-task: fraction of one task's training set (the mean task size).
/// Both stay constant over the run and are at least 1.
inline std::size_t replay_capacity(BufferPolicy policy, double fraction, std::size_t total_train,
                                   std::size_t n_tasks) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(Errc::invalid_argument, "buffer fraction must be in (0,1]");
  if (n_tasks == 0) throw Error(Errc::invalid_argument, "no tasks");
  const double base = policy == BufferPolicy::global_fixed
                          ? static_cast<double>(total_train)
                          : static_cast<double>(total_train) / static_cast<double>(n_tasks);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * base)));
}

struct ReplayState {
  ReplayBuffer buffer;
};

using StrategyState = std::variant<VanillaState, EwcState, LwfState, ReplayState>;

using Batch = std::vector<const Sample*>;

struct LossGrad {
  double loss = 0.0;
  HeadParams grad;
};

namespace detail {

inline Eigen::MatrixXd batch_matrix(const Batch& batch, std::size_t dim) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < batch.size(); ++r) {
    if (batch[r]->x.size() != dim) throw Error(Errc::dimension_mismatch, "batch sample has wrong dimension");
    for (std::size_t k = 0; k < dim; ++k) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = batch[r]->x[k];
  }
  return X;
}

// Row-wise softmax of z / temperature over masked-in columns; masked-out columns get 0.
inline Eigen::MatrixXd masked_softmax(const Eigen::MatrixXd& z, const ClassMask& mask, double temperature = 1.0) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < z.cols(); ++k)
      if (mask[static_cast<std::size_t>(k)]) mx = std::max(mx, z(r, k) / temperature);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      if (!mask[static_cast<std::size_t>(k)]) continue;
      p(r, k) = std::exp(z(r, k) / temperature - mx);
      sum += p(r, k);
    }
    p.row(r) /= sum;
  }
  return p;
}

inline std::size_t mask_count(const ClassMask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

}  // namespace detail

/// Mean masked cross-entropy over `batch` plus the strategy's regularizer,
/// with its exact gradient:
///   EWC: + sum over anchors of lambda/2 * sum_i F_i (theta_i - theta*_i)^2
///   LwF: + lambda * T^2 * mean KL(softmax(old/T) || softmax(new/T)) over the
///        classes seen before the current task
/// Replay and vanilla add nothing here; replay mixes its buffer into the batch.
inline LossGrad loss_and_grad(const HeadParams& h, const Batch& batch, const ClassMask& seen,
                              const StrategyState& strategy) {
  if (batch.empty()) throw Error(Errc::empty_input, "empty batch");
  if (seen.size() != h.classes()) throw Error(Errc::dimension_mismatch, "seen mask does not match head");
  for (const auto* s : batch) {
    if (s->label >= seen.size() || !seen[s->label]) {
      throw Error(Errc::validation, "label " + std::to_string(s->label) + " is not a seen class");
    }
  }
  const auto B = static_cast<double>(batch.size());
  const Eigen::MatrixXd X = detail::batch_matrix(batch, h.dim());
  const Eigen::MatrixXd Z = (X * h.W.transpose()).rowwise() + h.b.transpose();
  const Eigen::MatrixXd P = detail::masked_softmax(Z, seen);

  LossGrad out{0.0, HeadParams::zeros(h.classes(), h.dim())};
  Eigen::MatrixXd dZ = P;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto y = static_cast<Eigen::Index>(batch[r]->label);
    const auto ri = static_cast<Eigen::Index>(r);
    out.loss -= std::log(std::max(P(ri, y), std::numeric_limits<double>::min()));
    dZ(ri, y) -= 1.0;
  }
  out.loss /= B;
  dZ /= B;

  if (const auto* lwf = std::get_if<LwfState>(&strategy);
      lwf && lwf->snapshot && detail::mask_count(lwf->old_classes) > 0) {
    const double tau = lwf->temperature;
    const Eigen::MatrixXd Zold = (X * lwf->snapshot->W.transpose()).rowwise() + lwf->snapshot->b.transpose();
    const Eigen::MatrixXd Pold = detail::masked_softmax(Zold, lwf->old_classes, tau);
    const Eigen::MatrixXd Q = detail::masked_softmax(Z, lwf->old_classes, tau);
    double kl = 0.0;
    for (Eigen::Index r = 0; r < Z.rows(); ++r) {
      for (Eigen::Index k = 0; k < Z.cols(); ++k) {
        if (!lwf->old_classes[static_cast<std::size_t>(k)] || Pold(r, k) == 0.0) continue;
        kl += Pold(r, k) * (std::log(Pold(r, k)) - std::log(Q(r, k)));
      }
    }
    out.loss += lwf->lambda * tau * tau * kl / B;
    // d/dz_new of tau^2 * KL is tau * (q - p_old) on the old classes
    dZ += (lwf->lambda * tau / B) * (Q - Pold);
  }

  out.grad.W = dZ.transpose() * X;
  out.grad.b = dZ.colwise().sum().transpose();

  if (const auto* ewc = std::get_if<EwcState>(&strategy)) {
    for (const auto& a : ewc->anchors) {
      const Eigen::MatrixXd dW = h.W - a.theta.W;
      const Eigen::VectorXd db = h.b - a.theta.b;
      out.loss += 0.5 * a.lambda * (a.fisher.W.cwiseProduct(dW.cwiseProduct(dW)).sum() +
                                    a.fisher.b.cwiseProduct(db.cwiseProduct(db)).sum());
      out.grad.W += a.lambda * a.fisher.W.cwiseProduct(dW);
      out.grad.b += a.lambda * a.fisher.b.cwiseProduct(db);
    }
  }
  return out;
}

/// Diagonal empirical Fisher at `h`: mean over `data` of the squared
/// per-example cross-entropy gradient. The anchor is the current head.
inline EwcAnchor consolidate_ewc(const HeadParams& h, std::span<const Sample> data, const ClassMask& seen,
                                 double lambda) {
  if (data.empty()) throw Error(Errc::empty_input, "EWC consolidation needs task data");
  Batch all;
  all.reserve(data.size());
  for (const auto& s : data) all.push_back(&s);
  const Eigen::MatrixXd X = detail::batch_matrix(all, h.dim());
  const Eigen::MatrixXd Z = (X * h.W.transpose()).rowwise() + h.b.transpose();
  Eigen::MatrixXd dZ = detail::masked_softmax(Z, seen);
  for (std::size_t r = 0; r < all.size(); ++r) dZ(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(all[r]->label)) -= 1.0;

  // per-example gradient of W is dz x^T, so its square is (dz^2)(x^2)^T
  const auto n = static_cast<double>(data.size());
  EwcAnchor a{h, HeadParams::zeros(h.classes(), h.dim()), lambda};
  a.fisher.W = (dZ.array().square().matrix().transpose() * X.array().square().matrix()) / n;
  a.fisher.b = dZ.array().square().colwise().sum().transpose() / n;
  return a;
}

}  // namespace curforge

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curforge/core.hpp"
#include "curforge/data.hpp"
#include "curforge/error.hpp"
#include "curforge/rng.hpp"

namespace curforge {

/// Linear softmax head over frozen features: logits = W x + b, one row per class.
struct HeadParams {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;

  static HeadParams zeros(std::size_t n_classes, std::size_t dim) {
    return {Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_classes), static_cast<Eigen::Index>(dim)),
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_classes))};
  }

  std::size_t classes() const noexcept { return static_cast<std::size_t>(W.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(W.cols()); }
  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(W.size() + b.size()); }

  bool same_shape(const HeadParams& o) const noexcept {
    return W.rows() == o.W.rows() && W.cols() == o.W.cols() && b.size() == o.b.size();
  }
  bool all_finite() const { return W.allFinite() && b.allFinite(); }

  /// Flat view index: W in column-major order, then b.
  double& param(std::size_t i) {
    const auto nw = static_cast<std::size_t>(W.size());
    return i < nw ? W.data()[i] : b.data()[i - nw];
  }
  double param(std::size_t i) const {
    const auto nw = static_cast<std::size_t>(W.size());
    return i < nw ? W.data()[i] : b.data()[i - nw];
  }
};

/// Which classes currently take part in the softmax.
using ClassMask = std::vector<bool>;

enum class InitFamily { gaussian, uniform, xavier };

constexpr std::string_view to_string(InitFamily f) noexcept {
  switch (f) {
    case InitFamily::gaussian: return "gaussian";
    case InitFamily::uniform: return "uniform";
    case InitFamily::xavier: return "xavier";
  }
  return "unknown";
}

inline InitFamily init_family_from_string(std::string_view s) {
  if (s == "gaussian") return InitFamily::gaussian;
  if (s == "uniform") return InitFamily::uniform;
  if (s == "xavier") return InitFamily::xavier;
  throw Error(Errc::invalid_argument, "unknown init family '" + std::string(s) + "'");
}

/// gaussian: W ~ N(0, 0.01^2), b = 0.
/// uniform:  W, b ~ U(-1/sqrt(d), 1/sqrt(d)).
/// xavier:   W ~ U(-sqrt(6/(d+N)), sqrt(6/(d+N))), b = 0.
inline HeadParams init_head(std::size_t n_classes, std::size_t dim, InitFamily family, std::uint64_t seed) {
  if (n_classes == 0 || dim == 0) throw Error(Errc::invalid_argument, "head needs classes and dim > 0");
  auto h = HeadParams::zeros(n_classes, dim);
  Rng rng(derive_seed({seed, 0x1a17ULL}));
  auto fill = [&](auto&& dist, bool with_bias) {
    for (Eigen::Index j = 0; j < h.W.cols(); ++j)
      for (Eigen::Index i = 0; i < h.W.rows(); ++i) h.W(i, j) = dist(rng);
    if (with_bias)
      for (Eigen::Index i = 0; i < h.b.size(); ++i) h.b(i) = dist(rng);
  };
  const auto d = static_cast<double>(dim);
  switch (family) {
    case InitFamily::gaussian:
      fill(std::normal_distribution<double>(0.0, 0.01), false);
      break;
    case InitFamily::uniform: {
      const double a = 1.0 / std::sqrt(d);
      fill(std::uniform_real_distribution<double>(-a, a), true);
      break;
    }
    case InitFamily::xavier: {
      const double a = std::sqrt(6.0 / (d + static_cast<double>(n_classes)));
      fill(std::uniform_real_distribution<double>(-a, a), false);
      break;
    }
  }
  return h;
}

inline Eigen::VectorXd forward(const HeadParams& h, std::span<const double> x) {
  if (x.size() != h.dim()) {
    throw Error(Errc::dimension_mismatch, "input of dimension " + std::to_string(x.size()) +
                                              " for head of dimension " + std::to_string(h.dim()));
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  return h.W * xv + h.b;
}

/// Index of the largest logit among masked-in classes; ties go to the lower index.
inline ClassId masked_argmax(const Eigen::Ref<const Eigen::VectorXd>& logits, const ClassMask& mask) {
  ClassId best = logits.size();
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    if (best == static_cast<ClassId>(logits.size()) || logits(k) > logits(static_cast<Eigen::Index>(best))) {
      best = static_cast<ClassId>(k);
    }
  }
  if (best == static_cast<ClassId>(logits.size())) throw Error(Errc::invalid_argument, "empty class mask");
  return best;
}

/// Fraction of `samples` whose masked argmax equals the label.
inline double evaluate_accuracy(const HeadParams& h, std::span<const Sample> samples, const ClassMask& mask) {
  if (samples.empty()) throw Error(Errc::empty_input, "no test samples to evaluate");
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (masked_argmax(forward(h, s.x), mask) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

}  // namespace curforge

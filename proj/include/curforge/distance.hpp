#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curforge/error.hpp"
#include "curforge/rng.hpp"

namespace curforge {

using FeatureVector = std::vector<double>;

/// Mean feature vector of a class (or of a multi-class task).
struct Prototype {
  std::size_t id = 0;
  FeatureVector mean;
  std::size_t sample_count = 0;
};

enum class Metric { cosine, euclidean };

constexpr std::string_view to_string(Metric m) noexcept {
  return m == Metric::cosine ? "cosine" : "euclidean";
}

inline Metric metric_from_string(std::string_view s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "euclidean") return Metric::euclidean;
  throw Error(Errc::invalid_argument, "unknown distance metric '" + std::string(s) + "'");
}

namespace detail {

inline void require_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::dimension_mismatch, "vectors of dimension " + std::to_string(a.size()) +
                                              " and " + std::to_string(b.size()));
  }
}

}  // namespace detail

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  detail::require_same_dim(a, b);
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    ss += d * d;
  }
  return std::sqrt(ss);
}

/// 1 - cos(a, b); lies in [0, 2]. Both vectors must have non-zero norm.
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  detail::require_same_dim(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(Errc::invalid_argument, "cosine distance of a zero vector");
  const double cos = dot / std::sqrt(na * nb);
  return std::clamp(1.0 - cos, 0.0, 2.0);
}

inline double distance(Metric m, std::span<const double> a, std::span<const double> b) {
  return m == Metric::cosine ? cosine_distance(a, b) : euclidean_distance(a, b);
}

/// Mean of `sample_size` vectors drawn uniformly without replacement (all of
/// them when sample_size >= |features|). The draw is reproducible from `seed`.
inline Prototype compute_prototype(std::span<const FeatureVector> features, std::size_t sample_size,
                                   std::uint64_t seed, std::size_t id = 0) {
  if (features.empty()) throw Error(Errc::empty_input, "no feature vectors for prototype");
  if (sample_size == 0) throw Error(Errc::invalid_argument, "prototype sample size must be >= 1");
  const std::size_t dim = features.front().size();
  for (const auto& f : features) {
    if (f.size() != dim) throw Error(Errc::dimension_mismatch, "feature vectors differ in dimension");
  }

  std::vector<std::size_t> picked(features.size());
  std::iota(picked.begin(), picked.end(), std::size_t{0});
  if (sample_size < features.size()) {
    std::vector<std::size_t> sampled;
    sampled.reserve(sample_size);
    Rng rng(seed);
    std::sample(picked.begin(), picked.end(), std::back_inserter(sampled), sample_size, rng);
    picked = std::move(sampled);
  }

  FeatureVector mean(dim, 0.0);
  for (auto idx : picked) {
    for (std::size_t i = 0; i < dim; ++i) mean[i] += features[idx][i];
  }
  for (auto& v : mean) v /= static_cast<double>(picked.size());
  return {id, std::move(mean), picked.size()};
}

/// Prototype of a multi-class task: arithmetic mean of its member class means.
inline Prototype task_prototype(std::span<const Prototype> members, std::size_t id = 0) {
  if (members.empty()) throw Error(Errc::empty_input, "task prototype needs at least one member");
  const std::size_t dim = members.front().mean.size();
  FeatureVector mean(dim, 0.0);
  std::size_t count = 0;
  for (const auto& m : members) {
    if (m.mean.size() != dim) throw Error(Errc::dimension_mismatch, "member prototypes differ in dimension");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += m.mean[i];
    count += m.sample_count;
  }
  for (auto& v : mean) v /= static_cast<double>(members.size());
  return {id, std::move(mean), count};
}

/// Symmetric prototype distance table in fixed (base) index order.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;

  /// Takes a row-major n*n table. Rejects asymmetric, negative or non-zero-diagonal
  /// input; when `normalized` is set, entries must lie in [0,1] with max 1 (or all 0).
  DistanceMatrix(std::size_t n, std::vector<double> values, Metric metric, bool normalized)
      : n_(n), d_(std::move(values)), metric_(metric), normalized_(normalized) {
    if (d_.size() != n_ * n_) throw Error(Errc::invalid_argument, "distance table is not n*n");
    double max_off = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (d_[i * n_ + i] != 0.0) throw Error(Errc::validation, "distance diagonal must be zero");
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = d_[i * n_ + j];
        if (!std::isfinite(v) || v < 0.0) throw Error(Errc::validation, "distances must be finite and >= 0");
        if (v != d_[j * n_ + i]) throw Error(Errc::validation, "distance table is not symmetric");
        max_off = std::max(max_off, v);
      }
    }
    if (normalized_ && max_off > 1.0) {
      throw Error(Errc::validation, "normalized distances must lie in [0,1]");
    }
    if (normalized_ && max_off != 0.0 && max_off != 1.0) {
      throw Error(Errc::validation, "normalized distances must reach 1");
    }
  }

  std::size_t size() const noexcept { return n_; }
  Metric metric() const noexcept { return metric_; }
  bool normalized() const noexcept { return normalized_; }
  const std::vector<double>& values() const noexcept { return d_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }

  double at(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) throw Error(Errc::out_of_range, "distance index out of range");
    return d_[i * n_ + j];
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
  Metric metric_ = Metric::cosine;
  bool normalized_ = false;
};

/// Pairwise prototype distances. With `normalize`, off-diagonal entries are
/// divided by the largest off-diagonal entry (left unchanged when that is 0).
inline DistanceMatrix build_distance_matrix(std::span<const Prototype> prototypes, Metric metric,
                                            bool normalize) {
  const std::size_t n = prototypes.size();
  if (n < 2) throw Error(Errc::invalid_argument, "distance matrix needs at least 2 prototypes");
  std::vector<double> d(n * n, 0.0);
  double max_off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = distance(metric, prototypes[i].mean, prototypes[j].mean);
      d[i * n + j] = v;
      d[j * n + i] = v;
      max_off = std::max(max_off, v);
    }
  }
  if (normalize && max_off > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        // exact 1 for the max entry, never above it
        d[i * n + j] = d[i * n + j] == max_off ? 1.0 : d[i * n + j] / max_off;
      }
    }
  }
  return DistanceMatrix(n, std::move(d), metric, normalize);
}

}  // namespace curforge

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "curforge/core.hpp"
#include "curforge/distance.hpp"
#include "curforge/error.hpp"
#include "curforge/rng.hpp"

namespace curforge {

struct Sample {
  FeatureVector x;
  ClassId label = 0;
};

enum class Split { train, test };

constexpr std::string_view to_string(Split s) noexcept { return s == Split::train ? "train" : "test"; }

struct ClassSplit {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> test;

  const std::vector<FeatureVector>& get(Split s) const noexcept { return s == Split::train ? train : test; }
  friend bool operator==(const ClassSplit&, const ClassSplit&) = default;
};

/// Feature vectors grouped by class and split, in their fixed stream order.
struct Dataset {
  std::string name;
  std::size_t dim = 0;
  std::vector<ClassSplit> classes;

  std::size_t n_classes() const noexcept { return classes.size(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SyntheticSpec {
  std::vector<FeatureVector> centers;
  std::vector<double> spread;  // isotropic standard deviation per class
  std::uint64_t seed = 0;
};

struct SampleCounts {
  std::size_t train_per_class = 0;
  std::size_t test_per_class = 0;
};

struct DatasetManifest {
  std::string name;
  std::size_t n_classes = 0;
  std::size_t dim = 0;
  std::size_t train_per_class = 0;
  std::size_t test_per_class = 0;
  std::string source = "synthetic";  // "synthetic" or "file"
  std::string preset;                // synthetic only
  std::uint64_t seed = 0;            // synthetic only
  double spread = 0.0;               // synthetic only
  std::string features_path;         // file only
};

inline void validate_spec(const SyntheticSpec& spec) {
  if (spec.centers.empty()) throw Error(Errc::invalid_argument, "synthetic spec has no classes");
  if (spec.spread.size() != spec.centers.size()) {
    throw Error(Errc::invalid_argument, "synthetic spec needs one spread per class");
  }
  const std::size_t dim = spec.centers.front().size();
  if (dim == 0) throw Error(Errc::invalid_argument, "synthetic centers have dimension 0");
  for (const auto& c : spec.centers) {
    if (c.size() != dim) throw Error(Errc::dimension_mismatch, "synthetic centers differ in dimension");
    for (double v : c) {
      if (!std::isfinite(v)) throw Error(Errc::non_finite, "synthetic center is not finite");
    }
  }
  for (double s : spec.spread) {
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(Errc::invalid_argument, "synthetic spread must be > 0");
  }
}

/// Isotropic Gaussian draws around each class center. Each class has its own
/// generator seeded from (spec.seed, class); train vectors are drawn first,
/// then test vectors from the same stream.
inline Dataset generate_synthetic(const SyntheticSpec& spec, SampleCounts counts, std::string name = "synthetic") {
  validate_spec(spec);
  if (counts.train_per_class == 0 || counts.test_per_class == 0) {
    throw Error(Errc::invalid_argument, "synthetic sample counts must be positive");
  }
  Dataset ds;
  ds.name = std::move(name);
  ds.dim = spec.centers.front().size();
  ds.classes.resize(spec.centers.size());
  for (std::size_t c = 0; c < spec.centers.size(); ++c) {
    Rng rng(derive_seed({spec.seed, c}));
    std::normal_distribution<double> noise(0.0, spec.spread[c]);
    auto draw = [&](std::size_t n, std::vector<FeatureVector>& out) {
      out.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        FeatureVector v(ds.dim);
        for (std::size_t k = 0; k < ds.dim; ++k) v[k] = spec.centers[c][k] + noise(rng);
        out.push_back(std::move(v));
      }
    };
    draw(counts.train_per_class, ds.classes[c].train);
    draw(counts.test_per_class, ds.classes[c].test);
  }
  return ds;
}

inline constexpr double kDefaultPresetSpread = 0.3;
inline constexpr std::size_t kPresetDim = 8;

/// Named class geometries with analytically known designer preferences.
///
///   hub      class 0 orthogonal to a cluster of classes 1..4, so its cosine
///            distance to each of them is exactly 1.
///   twin     five cluster classes where 3 and 4 are near duplicates.
///   hub_twin class 0 points away from the direction the cluster (1..4)
///            shares and leans towards the twin pair 3/4. It has the lowest
///            spread of distances of any class, and the designer's best
///            curriculum starts with it and ends with a twin.
inline SyntheticSpec planted_geometry(std::string_view preset, double spread = kDefaultPresetSpread,
                                      std::uint64_t seed = 0) {
  auto e = [](std::size_t k, double scale = 1.0) {
    FeatureVector v(kPresetDim, 0.0);
    v[k] = scale;
    return v;
  };
  auto add = [](FeatureVector a, const FeatureVector& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
  };
  const auto shared = e(7);

  SyntheticSpec spec;
  spec.seed = seed;
  if (preset == "hub") {
    spec.centers = {e(0), add(shared, e(1, 0.5)), add(shared, e(2, 0.5)), add(shared, e(3, 0.5)),
                    add(shared, e(4, 0.5))};
  } else if (preset == "twin") {
    spec.centers = {add(shared, e(0, 0.5)), add(shared, e(1, 0.5)), add(shared, e(2, 0.5)),
                    add(shared, e(3, 0.5)), add(add(shared, e(3, 0.5)), e(4, 0.2))};
  } else if (preset == "hub_twin") {
    spec.centers = {add(add(e(0), e(7, -2.0)), e(3, 0.8)), add(shared, e(1, 0.45)), add(shared, e(2, 0.6)),
                    add(shared, e(3, 0.5)), add(add(shared, e(3, 0.5)), e(4, 0.2))};
  } else {
    throw Error(Errc::invalid_argument, "unknown geometry preset '" + std::string(preset) + "'");
  }
  spec.spread.assign(spec.centers.size(), spread);
  return spec;
}

/// Samples of one task from `split`: the task's classes are interleaved
/// round-robin, each class in its stored order. The result is the fixed
/// within-task exemplar order.
inline std::vector<Sample> task_samples(const Dataset& ds, const TaskSpec& task, Split split) {
  std::vector<Sample> out;
  std::size_t longest = 0;
  for (auto c : task.classes) {
    if (c >= ds.n_classes()) throw Error(Errc::out_of_range, "task class missing from dataset");
    longest = std::max(longest, ds.classes[c].get(split).size());
  }
  for (std::size_t i = 0; i < longest; ++i) {
    for (auto c : task.classes) {
      const auto& rows = ds.classes[c].get(split);
      if (i < rows.size()) out.push_back({rows[i], c});
    }
  }
  return out;
}

namespace detail {

inline std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error(Errc::io, "cannot format number");
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses the feature CSV (`class_id,split,f0,...,f{d-1}`). Class ids must be
/// below manifest.n_classes and every row must carry manifest.dim values.
/// Row order within a class and split is kept.
inline Dataset read_feature_csv(std::istream& in, const DatasetManifest& manifest) {
  if (manifest.n_classes == 0 || manifest.dim == 0) {
    throw Error(Errc::invalid_argument, "manifest needs positive n_classes and dim");
  }
  Dataset ds;
  ds.name = manifest.name;
  ds.dim = manifest.dim;
  ds.classes.resize(manifest.n_classes);

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw Error(Errc::parse, "feature file is empty");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::string expected = "class_id,split";
    for (std::size_t k = 0; k < manifest.dim; ++k) expected += ",f" + std::to_string(k);
    if (line != expected) {
      const auto cols = detail::split_commas(line);
      if (cols.size() >= 2 && cols[0] == "class_id" && cols[1] == "split") {
        throw Error(Errc::dimension_mismatch,
                    detail::line_error(lineno, "header has " + std::to_string(cols.size() - 2) +
                                                   " feature columns, manifest says " +
                                                   std::to_string(manifest.dim)));
      }
      throw Error(Errc::parse, detail::line_error(lineno, "header must start with class_id,split"));
    }
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = detail::split_commas(line);
    if (cols.size() < 2) throw Error(Errc::parse, detail::line_error(lineno, "malformed row"));

    std::size_t cls = 0;
    {
      auto [p, ec] = std::from_chars(cols[0].data(), cols[0].data() + cols[0].size(), cls);
      if (ec != std::errc{} || p != cols[0].data() + cols[0].size()) {
        throw Error(Errc::parse, detail::line_error(lineno, "malformed class id '" + std::string(cols[0]) + "'"));
      }
    }
    if (cls >= manifest.n_classes) {
      throw Error(Errc::out_of_range, detail::line_error(lineno, "unknown class id " + std::to_string(cls)));
    }
    Split split;
    if (cols[1] == "train") {
      split = Split::train;
    } else if (cols[1] == "test") {
      split = Split::test;
    } else {
      throw Error(Errc::parse, detail::line_error(lineno, "split must be train or test"));
    }
    if (cols.size() - 2 != manifest.dim) {
      throw Error(Errc::dimension_mismatch,
                  detail::line_error(lineno, "expected " + std::to_string(manifest.dim) + " values, got " +
                                                 std::to_string(cols.size() - 2)));
    }
    FeatureVector v(manifest.dim);
    for (std::size_t k = 0; k < manifest.dim; ++k) {
      const auto tok = cols[k + 2];
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v[k]);
      if (ec != std::errc{} || p != tok.data() + tok.size() || !std::isfinite(v[k])) {
        throw Error(Errc::parse, detail::line_error(lineno, "malformed value '" + std::string(tok) + "'"));
      }
    }
    (split == Split::train ? ds.classes[cls].train : ds.classes[cls].test).push_back(std::move(v));
  }
  return ds;
}

inline Dataset load_feature_csv(const std::string& path, const DatasetManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open feature file '" + path + "'");
  return read_feature_csv(in, manifest);
}

/// Writes shortest round-trip decimal values, so reading back is exact.
inline void write_feature_csv(std::ostream& out, const Dataset& ds) {
  out << "class_id,split";
  for (std::size_t k = 0; k < ds.dim; ++k) out << ",f" << k;
  out << '\n';
  for (auto split : {Split::train, Split::test}) {
    for (std::size_t c = 0; c < ds.n_classes(); ++c) {
      for (const auto& v : ds.classes[c].get(split)) {
        out << c << ',' << to_string(split);
        for (double x : v) out << ',' << detail::format_double(x);
        out << '\n';
      }
    }
  }
}

inline void save_feature_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write feature file '" + path + "'");
  write_feature_csv(out, ds);
}

}  // namespace curforge

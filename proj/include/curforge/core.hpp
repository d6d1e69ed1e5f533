#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "curforge/error.hpp"

namespace curforge {

/// Index into a dataset's class list.
using ClassId = std::size_t;

/// One unit of the incremental sequence. Class order inside a task is fixed as given.
struct TaskSpec {
  std::vector<ClassId> classes;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// Builds paradigm-I tasks: one task per class, class k in task k.
inline std::vector<TaskSpec> single_class_tasks(std::size_t n_classes) {
  std::vector<TaskSpec> tasks(n_classes);
  for (std::size_t k = 0; k < n_classes; ++k) tasks[k].classes = {k};
  return tasks;
}

/// An ordering of a base task list.
///
/// A curriculum is identified by its task-index permutation `order()` relative
/// to the base list it was built from; comparison and sorting use that
/// permutation lexicographically, so two curricula are only comparable when
/// they share a base.
class Curriculum {
 public:
  Curriculum() = default;

  static Curriculum from_order(std::span<const TaskSpec> base, std::vector<std::size_t> order) {
    if (order.size() != base.size()) {
      throw Error(Errc::validation, "curriculum order has " + std::to_string(order.size()) +
                                        " entries for " + std::to_string(base.size()) + " tasks");
    }
    std::vector<bool> used(base.size(), false);
    std::vector<TaskSpec> tasks;
    tasks.reserve(order.size());
    for (auto idx : order) {
      if (idx >= base.size() || used[idx]) {
        throw Error(Errc::validation, "curriculum order is not a permutation of the task list");
      }
      used[idx] = true;
      tasks.push_back(base[idx]);
    }
    Curriculum c;
    c.tasks_ = std::move(tasks);
    c.order_ = std::move(order);
    return c;
  }

  /// Recovers the permutation of `base` that produces `tasks`.
  static Curriculum from_tasks(std::span<const TaskSpec> base, const std::vector<TaskSpec>& tasks) {
    std::vector<std::size_t> order;
    order.reserve(tasks.size());
    for (const auto& t : tasks) {
      auto it = std::find(base.begin(), base.end(), t);
      if (it == base.end()) {
        throw Error(Errc::validation, "curriculum contains a task not present in the task list");
      }
      order.push_back(static_cast<std::size_t>(it - base.begin()));
    }
    return from_order(base, std::move(order));
  }

  const std::vector<TaskSpec>& tasks() const noexcept { return tasks_; }
  const std::vector<std::size_t>& order() const noexcept { return order_; }
  std::size_t size() const noexcept { return tasks_.size(); }

  std::size_t class_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tasks_) n += t.classes.size();
    return n;
  }

  /// Classes listed task by task in presentation order.
  std::vector<ClassId> class_sequence() const {
    std::vector<ClassId> seq;
    seq.reserve(class_count());
    for (const auto& t : tasks_) seq.insert(seq.end(), t.classes.begin(), t.classes.end());
    return seq;
  }

  friend bool operator==(const Curriculum& a, const Curriculum& b) noexcept {
    return a.order_ == b.order_;
  }
  friend std::strong_ordering operator<=>(const Curriculum& a, const Curriculum& b) noexcept {
    return a.order_ <=> b.order_;
  }

 private:
  std::vector<TaskSpec> tasks_;
  std::vector<std::size_t> order_;
};

enum class CurriculumIssue {
  ok,
  empty_task,
  duplicate_class,
  missing_class,
  class_out_of_range,
};

constexpr std::string_view to_string(CurriculumIssue issue) noexcept {
  switch (issue) {
    case CurriculumIssue::ok: return "ok";
    case CurriculumIssue::empty_task: return "empty task";
    case CurriculumIssue::duplicate_class: return "duplicate class";
    case CurriculumIssue::missing_class: return "missing class";
    case CurriculumIssue::class_out_of_range: return "class id out of range";
  }
  return "unknown";
}

/// Checks that `tasks` cover classes 0..n_classes-1 exactly once with no empty task.
/// Issues are reported in the order empty task, out of range, duplicate, missing.
inline CurriculumIssue validate_curriculum(std::span<const TaskSpec> tasks, std::size_t n_classes) {
  std::vector<int> hits(n_classes, 0);
  for (const auto& t : tasks) {
    if (t.classes.empty()) return CurriculumIssue::empty_task;
  }
  for (const auto& t : tasks) {
    for (auto c : t.classes) {
      if (c >= n_classes) return CurriculumIssue::class_out_of_range;
      if (++hits[c] > 1) return CurriculumIssue::duplicate_class;
    }
  }
  if (std::find(hits.begin(), hits.end(), 0) != hits.end()) return CurriculumIssue::missing_class;
  return CurriculumIssue::ok;
}

inline CurriculumIssue validate_curriculum(const Curriculum& c, std::size_t n_classes) {
  return validate_curriculum(std::span<const TaskSpec>(c.tasks()), n_classes);
}

/// Throws unless `tasks` is a non-empty list of non-empty tasks with pairwise disjoint classes.
inline void require_disjoint_tasks(std::span<const TaskSpec> tasks) {
  if (tasks.empty()) throw Error(Errc::empty_input, "task list is empty");
  std::vector<ClassId> all;
  for (const auto& t : tasks) {
    if (t.classes.empty()) throw Error(Errc::validation, "task with no classes");
    all.insert(all.end(), t.classes.begin(), t.classes.end());
  }
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
    throw Error(Errc::validation, "class appears in more than one task");
  }
}

inline std::size_t factorial(std::size_t n) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

/// All |tasks|! orderings, in lexicographic order of their task-index permutations.
inline std::vector<Curriculum> enumerate_curricula(std::span<const TaskSpec> tasks) {
  require_disjoint_tasks(tasks);
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Curriculum> out;
  out.reserve(factorial(tasks.size()));
  do {
    out.push_back(Curriculum::from_order(tasks, order));
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

inline constexpr std::size_t kMaxLetterClasses = 26;

/// Letter encoding: class k becomes the k-th uppercase letter, listed in presentation order.
inline std::string curriculum_to_string(const Curriculum& c) {
  const auto seq = c.class_sequence();
  if (seq.size() > kMaxLetterClasses) {
    throw Error(Errc::unsupported_size,
                "letter encoding supports at most 26 classes, got " + std::to_string(seq.size()));
  }
  std::string s;
  s.reserve(seq.size());
  for (auto k : seq) {
    if (k >= kMaxLetterClasses) {
      throw Error(Errc::unsupported_size, "class id " + std::to_string(k) + " has no letter");
    }
    s.push_back(static_cast<char>('A' + k));
  }
  return s;
}

/// Inverse of curriculum_to_string given the task shapes in `base`.
inline Curriculum curriculum_from_string(std::string_view s, std::span<const TaskSpec> base) {
  std::vector<std::size_t> order;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const char ch = s[pos];
    if (ch < 'A' || ch > 'Z') throw Error(Errc::parse, std::string("bad curriculum letter '") + ch + "'");
    const ClassId k = static_cast<ClassId>(ch - 'A');
    auto it = std::find_if(base.begin(), base.end(), [k](const TaskSpec& t) {
      return !t.classes.empty() && t.classes.front() == k;
    });
    if (it == base.end()) {
      throw Error(Errc::parse, std::string("letter '") + ch + "' does not start any task");
    }
    for (std::size_t i = 0; i < it->classes.size(); ++i) {
      if (pos + i >= s.size() || s[pos + i] != static_cast<char>('A' + it->classes[i])) {
        throw Error(Errc::parse, "curriculum string does not match task shapes");
      }
    }
    order.push_back(static_cast<std::size_t>(it - base.begin()));
    pos += it->classes.size();
  }
  return Curriculum::from_order(base, std::move(order));
}

/// Lower-triangular accuracy table: row t holds task-j test accuracy (j <= t)
/// measured after training task t. Rows are absent until set.
class AccuracyMatrix {
 public:
  AccuracyMatrix() = default;

  /// `task_class_counts[j]` is the number of classes in the task at position j;
  /// it weights that task's accuracy in averages.
  explicit AccuracyMatrix(std::vector<std::size_t> task_class_counts)
      : counts_(std::move(task_class_counts)), rows_(counts_.size()) {
    for (auto n : counts_) {
      if (n == 0) throw Error(Errc::invalid_argument, "task class count must be positive");
    }
  }

  static AccuracyMatrix equal_weights(std::size_t tasks) {
    return AccuracyMatrix(std::vector<std::size_t>(tasks, 1));
  }

  std::size_t tasks() const noexcept { return counts_.size(); }
  const std::vector<std::size_t>& class_counts() const noexcept { return counts_; }

  void set_row(std::size_t t, std::vector<double> values) {
    if (t >= tasks()) throw Error(Errc::out_of_range, "row index beyond task count");
    if (values.size() != t + 1) {
      throw Error(Errc::invalid_argument, "row " + std::to_string(t) + " needs exactly " +
                                              std::to_string(t + 1) + " entries");
    }
    for (double v : values) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::out_of_range, "accuracy outside [0,1]");
    }
    rows_[t] = std::move(values);
  }

  bool has_row(std::size_t t) const noexcept { return t < tasks() && !rows_[t].empty(); }
  bool defined(std::size_t t, std::size_t j) const noexcept { return has_row(t) && j <= t; }

  double at(std::size_t t, std::size_t j) const {
    if (!defined(t, j)) {
      throw Error(Errc::out_of_range,
                  "accuracy (" + std::to_string(t) + "," + std::to_string(j) + ") is undefined");
    }
    return rows_[t][j];
  }

  std::span<const double> row(std::size_t t) const {
    if (!has_row(t)) throw Error(Errc::out_of_range, "row " + std::to_string(t) + " is undefined");
    return rows_[t];
  }

  friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;

 private:
  std::vector<std::size_t> counts_;
  std::vector<std::vector<double>> rows_;
};

struct RunRecord {
  Curriculum curriculum;
  std::string strategy;
  std::uint64_t seed = 0;
  AccuracyMatrix acc;
  double alpha = 0.0;
  double beta = 0.0;
  double f = 0.0;
};

}  // namespace curforge

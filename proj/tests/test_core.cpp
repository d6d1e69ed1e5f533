#include <gtest/gtest.h>

#include <set>

#include "curforge/core.hpp"

using namespace curforge;

namespace {

std::vector<std::size_t> seq(std::initializer_list<std::size_t> v) { return v; }

}  // namespace

TEST(Enumerate, FiveSingleClassTasksGive120) {
  const auto tasks = single_class_tasks(5);
  const auto all = enumerate_curricula(tasks);
  ASSERT_EQ(all.size(), 120u);
  std::set<std::vector<std::size_t>> distinct;
  for (const auto& c : all) {
    distinct.insert(c.order());
    EXPECT_EQ(validate_curriculum(c, 5), CurriculumIssue::ok);
  }
  EXPECT_EQ(distinct.size(), 120u);
  EXPECT_TRUE(std::is_sorted(all.begin(), all.end()));
}

TEST(Enumerate, SingleTaskGivesOneCurriculum) {
  const auto all = enumerate_curricula(single_class_tasks(1));
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].order(), seq({0}));
}

TEST(Enumerate, ThreeTasksInLexicographicOrder) {
  const auto all = enumerate_curricula(single_class_tasks(3));
  const std::vector<std::vector<std::size_t>> expected{{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                                       {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  ASSERT_EQ(all.size(), expected.size());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].order(), expected[i]);
}

TEST(Enumerate, CountMatchesFactorialForGroupedTasks) {
  const std::vector<TaskSpec> tasks{{{0, 1}}, {{2, 3}}, {{4, 5}}, {{6, 7}}};
  const auto all = enumerate_curricula(tasks);
  EXPECT_EQ(all.size(), factorial(4));
  for (const auto& c : all) EXPECT_EQ(validate_curriculum(c, 8), CurriculumIssue::ok);
}

TEST(Enumerate, DuplicateClassAcrossTasksIsRejected) {
  const std::vector<TaskSpec> tasks{{{0, 1}}, {{1, 2}}};
  try {
    enumerate_curricula(tasks);
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::validation);
  }
}

TEST(Enumerate, EmptyTaskListIsRejected) {
  EXPECT_THROW(enumerate_curricula(std::vector<TaskSpec>{}), Error);
}

TEST(LetterEncoding, ReferenceCurricula) {
  const auto base = single_class_tasks(5);
  EXPECT_EQ(curriculum_to_string(Curriculum::from_order(base, {0, 1, 2, 4, 3})), "ABCED");
  EXPECT_EQ(curriculum_to_string(Curriculum::from_order(base, {0, 1, 2, 3, 4})), "ABCDE");
  EXPECT_EQ(curriculum_to_string(Curriculum::from_order(base, {3, 4, 2, 1, 0})), "DECBA");
}

TEST(LetterEncoding, GroupedTasksListClassesTaskByTask) {
  const std::vector<TaskSpec> base{{{0, 1}}, {{2, 3}}, {{4, 5}}};
  const auto c = Curriculum::from_order(base, {2, 0, 1});
  EXPECT_EQ(curriculum_to_string(c), "EFABCD");
}

TEST(LetterEncoding, MoreThan26ClassesIsUnsupported) {
  const auto base = single_class_tasks(27);
  std::vector<std::size_t> order(27);
  for (std::size_t i = 0; i < 27; ++i) order[i] = i;
  try {
    curriculum_to_string(Curriculum::from_order(base, order));
    FAIL() << "expected unsupported-size";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unsupported_size);
  }
}

TEST(LetterEncoding, RoundTripAndInjectivity) {
  for (const auto& base : {single_class_tasks(5), std::vector<TaskSpec>{{{0, 3}}, {{1, 2}}, {{4, 5}}}}) {
    std::set<std::string> seen;
    for (const auto& c : enumerate_curricula(base)) {
      const auto s = curriculum_to_string(c);
      EXPECT_TRUE(seen.insert(s).second) << "duplicate encoding " << s;
      EXPECT_EQ(curriculum_from_string(s, base), c);
    }
  }
}

TEST(LetterEncoding, ParseRejectsWrongShapes) {
  const std::vector<TaskSpec> base{{{0, 1}}, {{2, 3}}};
  EXPECT_THROW(curriculum_from_string("ACBD", base), Error);
  EXPECT_THROW(curriculum_from_string("AB", base), Error);
  EXPECT_THROW(curriculum_from_string("ab", base), Error);
  EXPECT_EQ(curriculum_from_string("CDAB", base).order(), seq({1, 0}));
}

TEST(Validate, SpecExamples) {
  EXPECT_EQ(validate_curriculum(std::vector<TaskSpec>{{{0}}, {{1}}, {{2}}}, 3), CurriculumIssue::ok);
  EXPECT_EQ(validate_curriculum(std::vector<TaskSpec>{{{0}}, {{0}}, {{1}}}, 3), CurriculumIssue::duplicate_class);
  EXPECT_EQ(validate_curriculum(std::vector<TaskSpec>{{{0}}, {{1}}}, 3), CurriculumIssue::missing_class);
}

TEST(Validate, EmptyTaskAndOutOfRangeHaveTheirOwnCodes) {
  EXPECT_EQ(validate_curriculum(std::vector<TaskSpec>{{{0}}, {}, {{1}}}, 2), CurriculumIssue::empty_task);
  EXPECT_EQ(validate_curriculum(std::vector<TaskSpec>{{{0}}, {{5}}}, 2), CurriculumIssue::class_out_of_range);
  EXPECT_EQ(validate_curriculum(std::vector<TaskSpec>{{{0, 0}}, {{1}}}, 2), CurriculumIssue::duplicate_class);
}

TEST(CurriculumType, FromOrderRejectsNonPermutations) {
  const auto base = single_class_tasks(3);
  EXPECT_THROW(Curriculum::from_order(base, {0, 0, 1}), Error);
  EXPECT_THROW(Curriculum::from_order(base, {0, 1}), Error);
  EXPECT_THROW(Curriculum::from_order(base, {0, 1, 3}), Error);
}

TEST(CurriculumType, FromTasksRecoversOrder) {
  const std::vector<TaskSpec> base{{{0, 1}}, {{2}}, {{3, 4}}};
  const auto c = Curriculum::from_tasks(base, {{{3, 4}}, {{0, 1}}, {{2}}});
  EXPECT_EQ(c.order(), seq({2, 0, 1}));
  EXPECT_EQ(c.class_sequence(), seq({3, 4, 0, 1, 2}));
  EXPECT_EQ(c.class_count(), 5u);
  EXPECT_THROW(Curriculum::from_tasks(base, {{{0}}, {{2}}, {{3, 4}}}), Error);
}

TEST(AccuracyMatrixType, UndefinedEntriesAreAbsent) {
  AccuracyMatrix acc = AccuracyMatrix::equal_weights(3);
  EXPECT_FALSE(acc.defined(0, 0));
  acc.set_row(0, {1.0});
  acc.set_row(1, {0.4, 0.9});
  EXPECT_TRUE(acc.defined(1, 1));
  EXPECT_FALSE(acc.defined(1, 2));
  EXPECT_FALSE(acc.has_row(2));
  EXPECT_DOUBLE_EQ(acc.at(1, 0), 0.4);
  EXPECT_THROW(acc.at(0, 1), Error);
  EXPECT_THROW(acc.at(2, 0), Error);
  EXPECT_EQ(acc.row(1).size(), 2u);
}

TEST(AccuracyMatrixType, RowsAreValidated) {
  AccuracyMatrix acc = AccuracyMatrix::equal_weights(2);
  EXPECT_THROW(acc.set_row(0, {0.5, 0.5}), Error);
  EXPECT_THROW(acc.set_row(1, {0.5, 1.5}), Error);
  EXPECT_THROW(acc.set_row(1, {-0.1, 0.5}), Error);
  EXPECT_THROW(acc.set_row(2, {0.1, 0.1, 0.1}), Error);
  EXPECT_THROW(AccuracyMatrix(std::vector<std::size_t>{1, 0}), Error);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "curforge/metrics.hpp"
#include "curforge/stats.hpp"
#include "support.hpp"

using namespace curforge;

namespace {

AccuracyMatrix matrix(std::vector<std::vector<double>> rows, std::vector<std::size_t> counts = {}) {
  if (counts.empty()) counts.assign(rows.size(), 1);
  AccuracyMatrix acc(counts);
  for (std::size_t t = 0; t < rows.size(); ++t) acc.set_row(t, rows[t]);
  return acc;
}

RankedCurricula ranking_from_scores(const std::vector<Curriculum>& cs, const std::vector<double>& scores,
                                    RankSource src = RankSource::empirical) {
  std::vector<RankedEntry> e;
  for (std::size_t i = 0; i < cs.size(); ++i) e.push_back({cs[i], scores[i], {}});
  return make_ranking(std::move(e), src);
}

}  // namespace

TEST(Effectiveness, Examples) {
  EXPECT_EQ(effectiveness(1.0, 0.0), 2.0);
  EXPECT_EQ(effectiveness(0.0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(effectiveness(0.5, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(effectiveness(0.2, 1.0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(effectiveness(1.0, 1.0), 1.0);
  EXPECT_THROW(effectiveness(1.1, 0.0), Error);
  EXPECT_THROW(effectiveness(0.5, -1.5), Error);
}

TEST(Effectiveness, IncreasesWithAlphaAndDecreasesWithBeta) {
  for (double b : {-0.5, 0.0, 0.4, 1.0}) {
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
      const double f = effectiveness(i / 100.0, b);
      EXPECT_GT(f, prev);
      prev = f;
    }
  }
  for (double a : {0.1, 0.5, 1.0}) {
    double prev = effectiveness(a, -1.0);
    for (int i = -99; i <= 100; ++i) {
      const double f = effectiveness(a, i / 100.0);
      EXPECT_LT(f, prev);
      prev = f;
    }
  }
}

TEST(AlphaBeta, Examples) {
  const auto acc = matrix({{0.9}, {0.6, 0.8}, {0.3, 0.5, 1.0}});
  const auto [a0, b0] = alpha_beta(acc, 0);
  EXPECT_DOUBLE_EQ(a0, 0.9);
  EXPECT_EQ(b0, 0.0);
  const auto [a2, b2] = alpha_beta(acc, 2);
  EXPECT_DOUBLE_EQ(a2, 0.6);
  EXPECT_DOUBLE_EQ(b2, 0.6);
  EXPECT_DOUBLE_EQ(evaluate_effectiveness(acc, 2).f, 2.0 / (0.6 + 1.0 / 0.6));
}

TEST(AlphaBeta, GroupedTasksWeightByClassCount) {
  const auto acc = matrix({{1.0}, {0.5, 0.8}}, {1, 3});
  EXPECT_DOUBLE_EQ(alpha_beta(acc, 1).first, (0.5 + 3 * 0.8) / 4.0);
}

TEST(AlphaBeta, ImprovedFirstTaskGivesNegativeBeta) {
  const auto acc = matrix({{0.5}, {0.7, 0.7}});
  EXPECT_DOUBLE_EQ(alpha_beta(acc, 1).second, -0.2);
}

TEST(Baselines, FiveTasks) {
  const std::vector<std::size_t> counts(5, 1);
  const auto ovf = overfitting_baseline(counts);
  EXPECT_DOUBLE_EQ(evaluate_effectiveness(ovf, 4).f, 1.0 / 3.0);
  const auto rnd = random_baseline(counts);
  EXPECT_DOUBLE_EQ(evaluate_effectiveness(rnd, 4).alpha, 0.2);
  EXPECT_DOUBLE_EQ(evaluate_effectiveness(rnd, 4).f, 2.0 / (0.8 + 5.0));
  const auto ft = f_over_time(ovf);
  ASSERT_EQ(ft.f.size(), 5u);
  EXPECT_EQ(ft.f, ft.overfitting);
  EXPECT_EQ(ft.f[0], 2.0);
}

TEST(RunRecordType, FilledFromFinalRow) {
  const auto base = single_class_tasks(3);
  const auto r = make_run_record(Curriculum::from_order(base, {2, 0, 1}), "vanilla", 4,
                                 matrix({{1.0}, {0.5, 1.0}, {0.25, 0.5, 1.0}}));
  EXPECT_DOUBLE_EQ(r.alpha, 1.75 / 3.0);
  EXPECT_DOUBLE_EQ(r.beta, 0.75);
  EXPECT_DOUBLE_EQ(r.f, 2.0 / (0.75 + 3.0 / 1.75));
  EXPECT_EQ(r.seed, 4u);
}

TEST(Recall, Examples) {
  const auto all = enumerate_curricula(single_class_tasks(3));  // 6 curricula
  const auto cd = ranking_from_scores(all, {6, 5, 4, 3, 2, 1}, RankSource::designer);
  const auto same = ranking_from_scores(all, {6, 5, 4, 3, 2, 1});
  const auto reversed = ranking_from_scores(all, {1, 2, 3, 4, 5, 6});
  const std::vector<RankedCurricula> one{same}, two{reversed}, both{reversed, same};
  EXPECT_EQ(recall_at_k(cd, one, 1), 1.0);
  EXPECT_EQ(recall_at_k(cd, two, 1), 0.0);
  EXPECT_EQ(recall_at_k(cd, two, 3), 0.0);
  EXPECT_DOUBLE_EQ(recall_at_k(cd, two, 4), 0.5);
  EXPECT_EQ(recall_at_k(cd, both, 2), 1.0);
  EXPECT_EQ(recall_at_k(cd, two, 6), 1.0);
  EXPECT_THROW(recall_at_k(cd, one, 0), Error);
  EXPECT_THROW(recall_at_k(cd, one, 7), Error);
}

TEST(Recall, DifferentUniverseIsRejected) {
  const auto three = enumerate_curricula(single_class_tasks(3));
  const std::vector<Curriculum> fewer(three.begin(), three.begin() + 5);
  const auto cd = ranking_from_scores(three, {6, 5, 4, 3, 2, 1}, RankSource::designer);
  const std::vector<RankedCurricula> e{ranking_from_scores(fewer, {1, 2, 3, 4, 5})};
  EXPECT_THROW(recall_at_k(cd, e, 1), Error);
}

TEST(Tiers, TwoValuesAndBoundary) {
  const auto cs = enumerate_curricula(single_class_tasks(3));
  const auto two = tier_partition({{cs[0], 0.0}, {cs[1], 1.0}}, 5);
  EXPECT_EQ(two.members[0].size(), 1u);
  EXPECT_EQ(two.members[4].size(), 1u);
  EXPECT_EQ(two.top_curricula(), std::vector<Curriculum>{cs[1]});

  const auto mid = tier_partition({{cs[0], 0.0}, {cs[1], 0.5}, {cs[2], 1.0}}, 2);
  EXPECT_EQ(mid.tier_of(cs[1]), 1u);
  EXPECT_EQ(mid.tier_of(cs[0]), 0u);
  EXPECT_EQ(mid.tier_of(cs[5]), 2u);
}

TEST(Tiers, AllEqualGoesToTop) {
  const auto cs = enumerate_curricula(single_class_tasks(3));
  std::vector<ScoredCurriculum> r;
  for (const auto& c : cs) r.emplace_back(c, 0.7);
  const auto p = tier_partition(r, 5);
  EXPECT_EQ(p.top().size(), 6u);
  for (std::size_t i = 0; i + 1 < 5; ++i) EXPECT_TRUE(p.members[i].empty());
  EXPECT_EQ(p.top_curricula(), cs);
}

TEST(Tiers, FiveValueExample) {
  const auto cs = enumerate_curricula(single_class_tasks(3));
  const std::vector<double> f{0.0, 0.1, 0.5, 0.95, 1.0};
  std::vector<ScoredCurriculum> r;
  for (std::size_t i = 0; i < f.size(); ++i) r.emplace_back(cs[i], f[i]);
  const auto p = tier_partition(r, 5);
  EXPECT_EQ(p.members[0].size(), 2u);
  EXPECT_TRUE(p.members[1].empty());
  EXPECT_EQ(p.members[2].size(), 1u);
  EXPECT_TRUE(p.members[3].empty());
  ASSERT_EQ(p.top().size(), 2u);
  EXPECT_EQ(p.top()[0].first, cs[4]);  // sorted by F descending
  EXPECT_EQ(p.top()[1].first, cs[3]);
  EXPECT_THROW(tier_partition(std::vector<ScoredCurriculum>{}, 5), Error);
}

TEST(Interleave, Examples) {
  const std::vector<std::string> s{"ABC", "CAB"};
  EXPECT_EQ(interleave_concat(std::span<const std::string>(s)), "ACBACB");
  const std::vector<std::string> one{"ABCED"};
  EXPECT_EQ(interleave_concat(std::span<const std::string>(one)), "ABCED");
  const std::vector<std::string> bad{"AB", "ABC"};
  EXPECT_THROW(interleave_concat(std::span<const std::string>(bad)), Error);
}

TEST(Discrepancy, Examples) {
  const auto base = single_class_tasks(5);
  const std::vector<Curriculum> abced{curriculum_from_string("ABCED", base)};
  const std::vector<Curriculum> decba{curriculum_from_string("DECBA", base)};
  EXPECT_EQ(discrepancy_h(abced, abced), 0.0);
  EXPECT_DOUBLE_EQ(discrepancy_h(abced, decba), 0.8);
  const std::vector<Curriculum> bcdea{curriculum_from_string("BCDEA", base)};
  const std::vector<Curriculum> abcde{curriculum_from_string("ABCDE", base)};
  EXPECT_EQ(discrepancy_h(abcde, bcdea), 1.0);
}

TEST(Discrepancy, ReferenceCountsAndSymmetry) {
  const auto base = single_class_tasks(4);
  std::vector<Curriculum> a, b;
  for (auto s : {"ABCD", "BACD", "DCBA"}) a.push_back(curriculum_from_string(s, base));
  for (auto s : {"ABCD", "ABDC"}) b.push_back(curriculum_from_string(s, base));
  // ref 1: ABCD vs ABCD -> 0. ref 2: ABBACCDD vs AABBCDDC -> 4/8
  EXPECT_DOUBLE_EQ(discrepancy_h(a, b, 1, 2), 0.25);
  EXPECT_DOUBLE_EQ(discrepancy_h(a, b, 3, 2), 0.5);
  std::mt19937_64 rng(4);
  const auto all = enumerate_curricula(single_class_tasks(5));
  for (int rep = 0; rep < 30; ++rep) {
    auto x = all, y = all;
    std::shuffle(x.begin(), x.end(), rng);
    std::shuffle(y.begin(), y.end(), rng);
    x.resize(1 + rep % 7);
    y.resize(1 + rep % 5);
    EXPECT_EQ(discrepancy_h(x, y, 4, 9), discrepancy_h(y, x, 9, 4));
    const double h = discrepancy_h(x, y);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
  }
  EXPECT_THROW(discrepancy_h(std::vector<Curriculum>{}, b), Error);
  EXPECT_THROW(discrepancy_h(a, b, 0, 1), Error);
}

TEST(Spearman, Examples) {
  const auto cs = enumerate_curricula(single_class_tasks(3));
  const std::vector<double> s{1, 2, 3, 4, 5, 6};
  const auto a = ranking_from_scores(cs, s);
  EXPECT_DOUBLE_EQ(spearman(a, a), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, ranking_from_scores(cs, {6, 5, 4, 3, 2, 1})), -1.0);
  // monotone transform leaves rho unchanged
  std::vector<double> e;
  for (double v : s) e.push_back(std::exp(3 * v) - 7);
  EXPECT_DOUBLE_EQ(spearman(a, ranking_from_scores(cs, e)), 1.0);
}

TEST(Spearman, AdjacentSwapOfFive) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 3, 4, 5};
  EXPECT_NEAR(spearman_rho(x, y), 0.9, 1e-15);
}

TEST(Spearman, TiesUseAverageRanks) {
  const std::vector<double> x{1, 1, 2};
  EXPECT_EQ(average_ranks(x), (std::vector<double>{1.5, 1.5, 3.0}));
  const std::vector<double> y{10, 20, 30};
  // ranks (1.5,1.5,3) vs (1,2,3): cross sum 1.5, squared sums 1.5 and 2
  EXPECT_NEAR(spearman_rho(x, y), 1.5 / std::sqrt(1.5 * 2.0), 1e-15);
}

TEST(TTest, EqualSamples) {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 2, 3, 4};
  const auto r = two_sample_ttest(x, y);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p, 1.0);
}

TEST(TTest, MatchesQuadratureOracle) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 3, 4, 5, 6};
  for (auto kind : {TTestKind::welch, TTestKind::pooled}) {
    const auto r = two_sample_ttest(x, y, kind);
    const auto ref = kind == TTestKind::welch ? oracle::welch_reference(x, y) : oracle::pooled_reference(x, y);
    EXPECT_NEAR(r.t, -1.0, 1e-12);
    EXPECT_NEAR(r.df, 8.0, 1e-12);
    EXPECT_NEAR(r.t, ref.t, 1e-12);
    EXPECT_NEAR(r.p, ref.p, 1e-9);
  }
}

TEST(TTest, UnequalVariancesMatchOracle) {
  const std::vector<double> x{0.1, 0.4, 0.35, 0.8, 0.05, 0.6}, y{1.0, 1.02, 0.99};
  const auto w = two_sample_ttest(x, y, TTestKind::welch);
  const auto rw = oracle::welch_reference(x, y);
  EXPECT_NEAR(w.t, rw.t, 1e-12);
  EXPECT_NEAR(w.df, rw.df, 1e-12);
  EXPECT_NEAR(w.p, rw.p, 1e-9);
  const auto p = two_sample_ttest(x, y, TTestKind::pooled);
  const auto rp = oracle::pooled_reference(x, y);
  EXPECT_NEAR(p.t, rp.t, 1e-12);
  EXPECT_NEAR(p.p, rp.p, 1e-9);
}

TEST(TTest, WellSeparatedSamples) {
  const std::vector<double> x{0.1, 0.11, 0.12, 0.1, 0.09}, y{0.9, 0.91, 0.89, 0.9, 0.92};
  EXPECT_LT(two_sample_ttest(x, y).p, 1e-3);
}

TEST(TTest, Errors) {
  const std::vector<double> c{2, 2, 2};
  try {
    two_sample_ttest(c, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate);
  }
  const std::vector<double> one{1}, two{1, 2};
  EXPECT_THROW(two_sample_ttest(one, two), Error);
}

TEST(StudentT, KnownValues) {
  // df = 1 is Cauchy: P(|T| >= 1) = 1/2
  EXPECT_NEAR(student_t_two_sided_p(1.0, 1.0), 0.5, 1e-14);
  // df = 2: P(|T| >= t) = 1 - t / sqrt(2 + t^2)
  for (double t : {0.3, 1.0, 2.5, 10.0}) EXPECT_NEAR(student_t_two_sided_p(t, 2.0), 1.0 - t / std::sqrt(2.0 + t * t), 1e-14);
  EXPECT_EQ(student_t_two_sided_p(0.0, 5.0), 1.0);
}

TEST(IncompleteBeta, ClosedForms) {
  // I_x(a, 1) = x^a and I_x(1, b) = 1 - (1-x)^b
  for (double x : {0.01, 0.3, 0.77, 0.99}) {
    EXPECT_NEAR(regularized_incomplete_beta(2.5, 1.0, x), std::pow(x, 2.5), 1e-14);
    EXPECT_NEAR(regularized_incomplete_beta(1.0, 3.0, x), 1.0 - std::pow(1.0 - x, 3.0), 1e-14);
  }
  EXPECT_THROW(regularized_incomplete_beta(0.0, 1.0, 0.5), Error);
  EXPECT_THROW(regularized_incomplete_beta(1.0, 1.0, 1.5), Error);
}

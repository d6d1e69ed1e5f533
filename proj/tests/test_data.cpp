#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "curforge/data.hpp"
#include "curforge/learner.hpp"

using namespace curforge;

namespace {

DatasetManifest manifest(std::size_t n, std::size_t d) {
  DatasetManifest m;
  m.name = "t";
  m.n_classes = n;
  m.dim = d;
  m.source = "file";
  return m;
}

std::string error_message(const std::string& csv, const DatasetManifest& m, Errc* code = nullptr) {
  std::istringstream in(csv);
  try {
    read_feature_csv(in, m);
  } catch (const Error& e) {
    if (code) *code = e.code();
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Synthetic, SampleMomentsMatchParameters) {
  SyntheticSpec s{{{1.0, -2.0}, {5.0, 0.0}}, {0.5, 2.0}, 11};
  const auto ds = generate_synthetic(s, {4000, 10});
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& rows = ds.classes[c].train;
    ASSERT_EQ(rows.size(), 4000u);
    EXPECT_EQ(ds.classes[c].test.size(), 10u);
    for (std::size_t k = 0; k < 2; ++k) {
      double m = 0, v = 0;
      for (const auto& r : rows) m += r[k];
      m /= 4000;
      for (const auto& r : rows) v += (r[k] - m) * (r[k] - m);
      v /= 3999;
      const double sd = s.spread[c];
      EXPECT_LT(std::abs(m - s.centers[c][k]), 5 * sd / std::sqrt(4000.0));
      // the sample variance has standard error sigma^2 * sqrt(2/(n-1))
      EXPECT_LT(std::abs(v - sd * sd), 5 * sd * sd * std::sqrt(2.0 / 3999));
    }
  }
}

TEST(Synthetic, TinySpreadIsPerfectlySeparable) {
  auto spec = planted_geometry("hub_twin", 1e-9, 2);
  const auto ds = generate_synthetic(spec, {50, 50});
  for (std::size_t c = 0; c < ds.n_classes(); ++c) {
    for (const auto& r : ds.classes[c].test)
      for (std::size_t k = 0; k < ds.dim; ++k) EXPECT_NEAR(r[k], spec.centers[c][k], 1e-7);
  }
  // a head trained on all classes jointly separates them completely
  std::vector<TaskSpec> one_task{{{0, 1, 2, 3, 4}}};
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.adam.lr = 0.05;
  const auto r = run_curriculum(ds, Curriculum::from_order(one_task, {0}), StrategyKind::vanilla, cfg);
  EXPECT_EQ(r.acc.at(0, 0), 1.0);
}

TEST(Synthetic, DeterministicPerSeed) {
  const auto spec = planted_geometry("twin", 0.3, 7);
  EXPECT_EQ(generate_synthetic(spec, {20, 5}), generate_synthetic(spec, {20, 5}));
  EXPECT_NE(generate_synthetic(spec, {20, 5}), generate_synthetic(planted_geometry("twin", 0.3, 8), {20, 5}));
  // adding test samples does not change the training draws
  EXPECT_EQ(generate_synthetic(spec, {20, 5}).classes[2].train, generate_synthetic(spec, {20, 9}).classes[2].train);
}

TEST(Synthetic, Validation) {
  EXPECT_THROW(generate_synthetic({{}, {}, 0}, {1, 1}), Error);
  EXPECT_THROW(generate_synthetic({{{1.0}, {1.0, 2.0}}, {1, 1}, 0}, {1, 1}), Error);
  EXPECT_THROW(generate_synthetic({{{1.0}}, {0.0}, 0}, {1, 1}), Error);
  EXPECT_THROW(generate_synthetic({{{1.0}}, {1.0}, 0}, {0, 1}), Error);
  EXPECT_THROW(planted_geometry("spiral"), Error);
}

TEST(Presets, Shapes) {
  for (auto name : {"hub", "twin", "hub_twin"}) {
    const auto s = planted_geometry(name, 0.25);
    EXPECT_EQ(s.centers.size(), 5u);
    for (const auto& c : s.centers) EXPECT_EQ(c.size(), kPresetDim);
    EXPECT_EQ(s.spread, std::vector<double>(5, 0.25));
  }
}

TEST(TaskSamples, RoundRobinOverClasses) {
  Dataset ds;
  ds.dim = 1;
  ds.classes = {{{{0.0}, {1.0}, {2.0}}, {{9.0}}}, {{{10.0}}, {}}, {{{20.0}, {21.0}}, {}}};
  const auto s = task_samples(ds, TaskSpec{{2, 0}}, Split::train);
  ASSERT_EQ(s.size(), 5u);
  const std::vector<double> xs{20, 0, 21, 1, 2};
  const std::vector<ClassId> ys{2, 0, 2, 0, 0};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(s[i].x[0], xs[i]);
    EXPECT_EQ(s[i].label, ys[i]);
  }
  EXPECT_THROW(task_samples(ds, TaskSpec{{3}}, Split::train), Error);
}

TEST(Csv, ParsesRowsInOrder) {
  std::istringstream in("class_id,split,f0,f1\n1,train,0.5,-1\n0,test,2,3\n1,train,4,5e-1\n");
  const auto ds = read_feature_csv(in, manifest(2, 2));
  EXPECT_EQ(ds.classes[1].train, (std::vector<FeatureVector>{{0.5, -1}, {4, 0.5}}));
  EXPECT_EQ(ds.classes[0].test, (std::vector<FeatureVector>{{2, 3}}));
  EXPECT_TRUE(ds.classes[0].train.empty());
}

TEST(Csv, ShortRowNamesItsLine) {
  Errc code{};
  const auto msg = error_message("class_id,split,f0,f1\n0,train,1,2\n0,train,1\n", manifest(1, 2), &code);
  EXPECT_EQ(code, Errc::dimension_mismatch);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Csv, RejectsBadInput) {
  const auto m = manifest(2, 1);
  Errc code{};
  EXPECT_NE(error_message("class_id,split,f0\n2,train,1\n", m, &code).find("line 2"), std::string::npos);
  EXPECT_EQ(code, Errc::out_of_range);
  error_message("class_id,split,f0\n0,valid,1\n", m, &code);
  EXPECT_EQ(code, Errc::parse);
  error_message("class_id,split,f0\n0,train,abc\n", m, &code);
  EXPECT_EQ(code, Errc::parse);
  error_message("class_id,split,f0\nx,train,1\n", m, &code);
  EXPECT_EQ(code, Errc::parse);
  error_message("class_id,split,f0\n0,train,nan\n", m, &code);
  EXPECT_EQ(code, Errc::parse);
  error_message("class_id,split,f0,f1\n", m, &code);
  EXPECT_EQ(code, Errc::dimension_mismatch);
  error_message("label,f0\n", m, &code);
  EXPECT_EQ(code, Errc::parse);
  error_message("", m, &code);
  EXPECT_EQ(code, Errc::parse);
}

TEST(Csv, RoundTripIsExact) {
  const auto ds = generate_synthetic(planted_geometry("hub_twin", 0.3, 4), {30, 7});
  std::ostringstream out;
  write_feature_csv(out, ds);
  std::istringstream in(out.str());
  auto m = manifest(5, kPresetDim);
  m.name = ds.name;
  EXPECT_EQ(read_feature_csv(in, m), ds);
}

TEST(Csv, AcceptsCrLfAndBlankLines) {
  std::istringstream in("class_id,split,f0\r\n0,train,1.5\r\n\r\n0,test,2\r\n");
  const auto ds = read_feature_csv(in, manifest(1, 1));
  EXPECT_EQ(ds.classes[0].train.size(), 1u);
  EXPECT_EQ(ds.classes[0].test.size(), 1u);
}

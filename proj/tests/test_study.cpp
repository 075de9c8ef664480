#include <gtest/gtest.h>

#include <cmath>

#include "m3/config.hpp"
#include "m3/study.hpp"

using namespace m3;

namespace {

StudyConfig small_smith(std::size_t threads) {
  StudyConfig c;
  c.sites = {-2.0, -1.0, 1.0, 2.0};
  c.t0 = 0.0;
  c.replicates = 24;
  c.draws = 30;
  c.seed = 99;
  c.threads = threads;
  c.methods = {{"ppp", "ppp", 1e-6}, {"gt", "gt", 1e-6}};
  c.gt.fit_samples = 100;
  return c;
}

}  // namespace

TEST(Study, DeterministicAcrossThreadCounts) {
  const StudyReport a = run_study(small_smith(1));
  const StudyReport b = run_study(small_smith(3));
  EXPECT_EQ(a.log_truth, b.log_truth);
  ASSERT_EQ(a.methods.size(), 2u);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_EQ(a.methods[m].crps, b.methods[m].crps);
    EXPECT_EQ(a.methods[m].scores.crps, b.methods[m].scores.crps);
  }
  EXPECT_EQ(report_table_csv(a), report_table_csv(b));
  EXPECT_EQ(report_scores_csv(a), report_scores_csv(b));
  EXPECT_EQ(report_to_json(a).dump(), report_to_json(b).dump());
}

TEST(Study, ScoresAreFiniteAndNegative) {
  const StudyReport r = run_study(small_smith(1));
  EXPECT_TRUE(r.has_gt_fit);
  for (const auto& m : r.methods) {
    EXPECT_EQ(m.failures, 0u);
    EXPECT_EQ(m.scores.count, 24u);
    EXPECT_LT(m.scores.crps, 0.0);
    EXPECT_GT(m.scores.mae, 0.0);
  }
}

TEST(Study, ErrorsAreRecordedPerCell) {
  // no free index allowed: only data generated by a single atom survive
  StudyConfig c = small_smith(1);
  c.methods = {{"ppp", "capped", 1e-6}};
  c.tol.max_free = 0;
  const StudyReport r = run_study(c);
  const MethodResult& m = r.methods[0];
  EXPECT_GT(m.failures, 0u);
  EXPECT_EQ(m.failures + m.scores.count, 24u);
  EXPECT_EQ(m.errors.at("TooManyFreeIndices"), m.failures);
  for (std::size_t k = 0; k < 24; ++k) {
    EXPECT_EQ(std::isnan(m.crps[k]), !m.error_names[k].empty());
    EXPECT_EQ(std::isnan(m.abs_error[k]), !m.error_names[k].empty());
  }
  EXPECT_NE(report_table_csv(r).find("," + std::to_string(m.failures) + "\n"), std::string::npos);
}

TEST(Study, TableMarksMethodsWithoutSuccesses) {
  StudyReport r;
  MethodResult m;
  m.label = "none";
  m.failures = 3;
  m.errors["ConflictError"] = 3;
  m.crps.assign(3, std::nan(""));
  m.abs_error.assign(3, std::nan(""));
  m.error_names.assign(3, "ConflictError");
  r.methods.push_back(m);
  r.log_truth = {0.1, 0.2, 0.3};
  EXPECT_EQ(report_table_csv(r), "method,CRPS_K,MAE_K,successes,failures\nnone,NA,NA,0,3\n");
  EXPECT_NE(report_scores_csv(r).find("0,none,"), std::string::npos);
}

TEST(Study, RejectsEmptyConfigurations) {
  StudyConfig c = small_smith(1);
  c.replicates = 0;
  EXPECT_THROW(run_study(c), InvalidCount);
  c = small_smith(1);
  c.methods.clear();
  EXPECT_THROW(run_study(c), InvalidArgument);
}

TEST(Study, DiscreteModel) {
  StudyConfig c = small_smith(2);
  c.model.model = "discrete";
  c.model.lattice.pitch = 1.0;
  c.model.lattice.lo = -5;
  c.model.lattice.hi = 5;
  c.model.lattice.shapes = {{-1, {0.25, 0.5, 0.25}}, {-1, {0.4, 0.4, 0.2}}};
  c.model.lattice.probs = {0.5, 0.5};
  const StudyReport r = run_study(c);
  EXPECT_EQ(r.methods[0].failures, 0u);
  EXPECT_EQ(r.methods[1].failures, 0u);
}

TEST(Study, TruthLaws) {
  ModelConfig m;
  EXPECT_TRUE(truth_law(m).finite());
  m.model = "brown_resnick";
  EXPECT_FALSE(truth_law(m).finite());
  EXPECT_EQ(truth_law(m).support_radius(), 20.0);
  m.model = "discrete";
  EXPECT_THROW(truth_law(m), InvalidArgument);
}

TEST(Study, BrownResnickHybridRuns) {
  StudyConfig c = small_smith(1);
  c.model.model = "brown_resnick";
  c.model.n_shapes = 40;
  c.replicates = 6;
  c.methods = {{"ppp", "PPP1", 1e-6}};
  const StudyReport r = run_study(c);
  EXPECT_EQ(r.methods[0].scores.count + r.methods[0].failures, 6u);
  EXPECT_FALSE(r.has_gt_fit);
}

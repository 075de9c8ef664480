#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "m3/scenario.hpp"
#include "m3/uncond_sim.hpp"

using namespace m3;

namespace {

std::shared_ptr<const ShapeFamily> smith() {
  return std::make_shared<const ShapeFamily>(build_smith_family());
}

std::shared_ptr<const Envelope> envelope(std::vector<double> t, std::vector<double> z,
                                         std::shared_ptr<const ShapeFamily> fam = smith(),
                                         Tolerances tol = {}) {
  return std::make_shared<const Envelope>(canonicalize_observations(t, z), std::move(fam), tol);
}

ShapeDescriptor shifted_smith(double mu) {
  AnalyticShape a;
  a.name = "shifted";
  a.value = [mu](double x) { return normal_pdf(x - mu); };
  a.derivative = [mu](double x) { return -(x - mu) * normal_pdf(x - mu); };
  a.support_radius = 6.0 + std::abs(mu);
  a.sup_value = normal_pdf(0.0);
  return ShapeDescriptor(std::move(a));
}

Block block(std::vector<std::size_t> m, double w, bool forced = false) {
  Block b;
  b.members = std::move(m);
  b.weight = w;
  b.forced = forced;
  return b;
}

double total_prob(const std::vector<Scenario>& s) {
  double p = 0.0;
  for (const auto& x : s) p += x.prob;
  return p;
}

}  // namespace

TEST(Blocks, SymmetricSmith) {
  const auto env = envelope({-1.0, 1.0}, {1.0, 1.0});
  const BlockSet set = enumerate_feasible_blocks(*env, 1e-6);
  ASSERT_EQ(set.blocks.size(), 3u);
  EXPECT_NEAR(set.blocks[0].weight, 0.8413447460685429, 1e-8);
  EXPECT_EQ(set.blocks[2].members, (std::vector<std::size_t>{0, 1}));
  EXPECT_NEAR(set.blocks[2].weight, 0.12098536225957168, 1e-10);
  EXPECT_FALSE(set.blocks[2].forced);
}

TEST(Scenarios, SymmetricSmithProbabilities) {
  const ScenarioTable table(envelope({-1.0, 1.0}, {1.0, 1.0}), 1e-6);
  const auto& sc = table.scenarios();
  ASSERT_EQ(sc.size(), 2u);
  EXPECT_NEAR(sc[0].weight, 0.707860981737141, 1e-8);
  EXPECT_NEAR(sc[1].weight, 0.12098536225957168, 1e-10);
  EXPECT_NEAR(sc[0].prob, 0.8540316149840536, 1e-8);
  EXPECT_NEAR(sc[1].prob, 0.14596838501594636, 1e-8);
  EXPECT_NEAR(total_prob(sc), 1.0, 1e-14);
}

TEST(Scenarios, ProbabilitiesSumToOneOnRandomData) {
  const ShapeLaw law(smith());
  const std::vector<double> t{-2.0, -1.0, 1.0, 2.0};
  Rng rng = make_rng(21);
  for (int r = 0; r < 25; ++r) {
    const auto z = simulate_max_field(law, t, SimWindow::covering(t, 6.0), rng).values;
    const auto env = envelope(t, z);
    const ScenarioTable table(env, 1e-6);
    EXPECT_NEAR(total_prob(table.scenarios()), 1.0, 1e-12);
    for (const auto& s : table.scenarios()) EXPECT_GT(s.prob, 0.0);
  }
}

TEST(Scenarios, TriplePointIsForced) {
  const ScenarioTable table(envelope({-1.0, 0.0, 1.0}, {1.0, std::exp(0.5), 1.0}), 1e-6);
  const auto& sc = table.scenarios();
  ASSERT_EQ(sc.size(), 1u);
  EXPECT_EQ(sc[0].prob, 1.0);
  const Block& b = table.blocks().blocks[sc[0].blocks[0]];
  EXPECT_EQ(b.members, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(b.forced);
  EXPECT_TRUE(b.exact);
}

TEST(Scenarios, PartitionCountForFourIndices) {
  BlockSet set;
  set.n = 4;
  for (std::size_t i = 0; i < 4; ++i) set.blocks.push_back(block({i}, 1.0));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) set.blocks.push_back(block({i, j}, 1.0));
  }
  EXPECT_EQ(enumerate_scenarios(set).size(), 10u);
}

TEST(Scenarios, ForcedBlockCoversItsMembers) {
  BlockSet set;
  set.n = 4;
  for (std::size_t i = 0; i < 4; ++i) set.blocks.push_back(block({i}, 1.0));
  set.blocks.push_back(block({2, 3}, 0.5));
  set.blocks.push_back(block({0, 1, 2}, 1.0, true));
  const auto sc = enumerate_scenarios(set);
  ASSERT_EQ(sc.size(), 1u);
  EXPECT_EQ(sc[0].blocks, (std::vector<std::size_t>{3, 5}));
  EXPECT_EQ(sc[0].weight, 1.0);
}

TEST(Scenarios, Errors) {
  BlockSet set;
  set.n = 2;
  set.blocks.push_back(block({0}, 1.0));
  EXPECT_THROW(enumerate_scenarios(set), InfeasibleError);

  BlockSet many;
  many.n = 13;
  for (std::size_t i = 0; i < 13; ++i) many.blocks.push_back(block({i}, 1.0));
  EXPECT_THROW(enumerate_scenarios(many, 12), TooManyFreeIndices);
  EXPECT_EQ(enumerate_scenarios(many, 13).size(), 1u);

  EXPECT_THROW(scenario_probabilities({}), InfeasibleError);
}

TEST(ForcedConflicts, OverlapThrowsAndSubsetIsDropped) {
  BlockSet set;
  set.n = 5;
  set.blocks.push_back(block({0, 1, 2}, 1.0, true));
  set.blocks.push_back(block({2, 3, 4}, 1.0, true));
  EXPECT_THROW(check_forced_conflicts(set), ConflictError);

  BlockSet nested;
  nested.n = 4;
  nested.blocks.push_back(block({0, 1, 2}, 1.0, true));
  nested.blocks.push_back(block({0, 1, 2, 3}, 1.0, true));
  check_forced_conflicts(nested);
  ASSERT_EQ(nested.blocks.size(), 1u);
  EXPECT_EQ(nested.blocks[0].members.size(), 4u);
  EXPECT_FALSE(nested.diagnostics.empty());
}

TEST(Labelling, ExactTripleCandidatesAreInvariant) {
  auto fam = std::make_shared<const ShapeFamily>(
      ShapeFamily::create({smith_shape(), shifted_smith(0.5)}, {0.3, 0.7}));
  const ScenarioTable table(envelope({-1.0, 0.0, 1.0}, {1.0, std::exp(0.5), 1.0}, fam), 1e-6);
  const Block* triple = nullptr;
  for (const Block& b : table.blocks().blocks) {
    if (b.members.size() == 3) triple = &b;
  }
  ASSERT_NE(triple, nullptr);
  ASSERT_EQ(triple->candidates.size(), 2u);
  const auto& obs = table.envelope().obs();
  const auto p01 = candidate_probabilities(*triple, 0, 1, obs, *fam, {});
  const auto p12 = candidate_probabilities(*triple, 1, 2, obs, *fam, {});
  const auto p02 = candidate_probabilities(*triple, 0, 2, obs, *fam, {});
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_NEAR(p01[k], p12[k], 1e-6 * p01[k]);
    EXPECT_NEAR(p01[k], p02[k], 1e-6 * p01[k]);
  }
  EXPECT_NEAR(p01[triple->candidates[0].shape_id == 0 ? 0 : 1], 0.3, 1e-6);
}

TEST(Labelling, InconsistentCandidatesAreRejected) {
  auto fam = smith();
  const auto env = envelope({-1.0, 0.0, 1.0}, {1.0, std::exp(0.5), 1.0});
  Block b = block({0, 1, 2}, 1.0, true);
  b.candidates.push_back({0.0, 4.132731354122493, 0, 0.0});
  b.candidates.push_back({0.3, 4.0, 0, 0.0});
  EXPECT_THROW(check_labelling_invariance(b, env->obs(), *fam, {}), LabellingError);
  b.exact = false;
  EXPECT_NO_THROW(check_labelling_invariance(b, env->obs(), *fam, {}));
}

TEST(Generators, AttainObservationsAndStayBelowOthers) {
  const ScenarioTable table(envelope({-2.0, -1.0, 1.0, 2.0}, {1.2, 0.8, 2.0, 1.1}), 1e-6);
  const auto& obs = table.envelope().obs();
  Rng rng = make_rng(22);
  for (int r = 0; r < 300; ++r) {
    const std::size_t s = table.sample_scenario(rng);
    const auto atoms = table.sample_generators(s, rng);
    ASSERT_EQ(atoms.size(), table.scenarios()[s].blocks.size());
    std::vector<double> z(obs.size(), 0.0);
    for (const Atom& a : atoms) {
      for (std::size_t i = 0; i < obs.size(); ++i) {
        z[i] = std::max(z[i], a.u * normal_pdf(obs.site(i) - a.s));
      }
    }
    for (std::size_t i = 0; i < obs.size(); ++i) {
      ASSERT_NEAR(z[i], obs.value(i), 1e-9 * obs.value(i));
    }
  }
}

TEST(Generators, ScenarioFrequencies) {
  const ScenarioTable table(envelope({-1.0, 1.0}, {1.0, 1.0}), 1e-6);
  Rng rng = make_rng(23);
  int joint = 0;
  const int n = 40000;
  for (int r = 0; r < n; ++r) joint += table.sample_scenario(rng) == 1;
  EXPECT_NEAR(joint / static_cast<double>(n), 0.14596838501594636, 0.006);
}

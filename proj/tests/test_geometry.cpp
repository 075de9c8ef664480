#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "m3/geometry.hpp"

using namespace m3;

namespace {

constexpr double kY0 = 4.132731354122493;       // 1 / phi(1)
constexpr double kPairWeight = 0.12098536225957168;
constexpr double kSingleton = 0.8413447460685429;  // Phi(1)

std::shared_ptr<const ShapeFamily> smith() {
  return std::make_shared<const ShapeFamily>(build_smith_family());
}

Observations obs_of(std::vector<double> t, std::vector<double> z) {
  return canonicalize_observations(t, z);
}

ShapeDescriptor constant_shape(double level, double radius) {
  AnalyticShape a;
  a.name = "box";
  a.value = [level](double) { return level; };
  a.derivative = [](double) { return 0.0; };
  a.support_radius = radius;
  a.sup_value = level;
  return ShapeDescriptor(std::move(a));
}

}  // namespace

TEST(PairRoots, SymmetricSmith) {
  const auto r = pair_roots(smith_shape(), -1.0, 1.0, 1.0, 1.0, Tolerances{});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r[0], 0.0, 1e-12);
}

TEST(PairRoots, ShiftedByValueRatio) {
  const auto r = pair_roots(smith_shape(), -1.0, 1.0, 1.0, std::exp(1.0), Tolerances{});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r[0], 0.5, 1e-10);
}

TEST(PairRoots, TabulatedClosedForm) {
  const ShapeDescriptor tent = TabulatedShape({-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0});
  // on [0, 0.5]: 1 - x = (0.5 + x) / 0.6
  auto r = pair_roots(tent, 0.0, 1.0, 0.5, 0.6, Tolerances{});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r[0], 0.0625, 1e-14);
  // crossing exactly on a breakpoint
  r = pair_roots(tent, 0.0, 1.0, 0.5, 2.0, Tolerances{});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r[0], 0.5, 1e-14);
}

TEST(PairRoots, CoincidingCurvesThrow) {
  const ShapeDescriptor flat = TabulatedShape({-1.0, 0.0, 1.0, 2.0}, {0.0, 1.0, 1.0, 0.0});
  EXPECT_THROW(pair_roots(flat, 0.0, 1.0, 0.5, 1.0, Tolerances{}), IntervalIntersectionError);
  EXPECT_THROW(pair_roots(constant_shape(0.5, 1.0), 0.0, 1.0, 0.5, 1.0, Tolerances{}),
               IntervalIntersectionError);
}

TEST(Envelope, ValueAndArgminAtCrossing) {
  const Envelope env(obs_of({-1.0, 1.0}, {1.0, 1.0}), smith());
  const EnvelopePoint p = envelope_value(env, 0, 0.0);
  EXPECT_NEAR(p.y, kY0, 1e-12);
  EXPECT_EQ(p.argmin, (std::vector<std::size_t>{0, 1}));
  const EnvelopePoint q = envelope_value(env, 0, -0.5);
  EXPECT_EQ(q.argmin, (std::vector<std::size_t>{0}));
  EXPECT_EQ(env.curve(0, 0, 20.0), kInf);
  EXPECT_EQ(env.curve_support(1, 0).lo, -5.0);
  EXPECT_EQ(env.roots(0, 1, 0).size(), 1u);
  EXPECT_THROW((void)env.roots(0, 1, 1), InvalidArgument);
}

TEST(PairIntersections, SymmetricSmithClosedForm) {
  const Envelope env(obs_of({-1.0, 1.0}, {1.0, 1.0}), smith());
  const auto pts = find_pair_intersections(env, 0, 1);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_NEAR(pts[0].x0, 0.0, 1e-12);
  EXPECT_NEAR(pts[0].y0, kY0, 1e-10);
  EXPECT_NEAR(pts[0].weight, kPairWeight, 1e-10);
}

TEST(PairIntersections, WeightScalesWithProbabilityAndValues) {
  auto fam = std::make_shared<const ShapeFamily>(
      ShapeFamily::create({smith_shape(), smith_shape()}, {0.5, 0.5}));
  const Envelope env(obs_of({-1.0, 1.0}, {1.0, 1.0}), fam);
  const auto pts = find_pair_intersections(env, 1, 0);
  ASSERT_EQ(pts.size(), 2u);
  for (const auto& p : pts) EXPECT_NEAR(p.weight, 0.5 * kPairWeight, 1e-10);

  const Envelope doubled(obs_of({-1.0, 1.0}, {2.0, 2.0}), smith());
  const auto d = find_pair_intersections(doubled, 0, 1);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NEAR(d[0].weight, kPairWeight / 8.0, 1e-10);
}

TEST(PairIntersections, ThirdCurveBelowRemovesPoint) {
  const Envelope env(obs_of({-1.0, 0.0, 1.0}, {1.0, 0.5, 1.0}), smith());
  EXPECT_TRUE(find_pair_intersections(env, 0, 2).empty());
  EXPECT_EQ(find_pair_intersections(env, 0, 1).size(), 1u);
}

TEST(PairWeight, TangencyIsRejected) {
  const ShapeDescriptor tent = TabulatedShape({-2.0, 0.0, 2.0}, {0.0, 0.5, 0.0});
  auto fam = std::make_shared<const ShapeFamily>(ShapeFamily::create({tent}, {1.0}));
  const Observations obs = obs_of({0.0, 0.2}, {1.0, 1.0});
  CandidatePoint p{-0.5, 3.0, 0, 0.0};
  EXPECT_THROW(pair_point_weight(p, 0, 1, obs, *fam), TangencyError);
}

TEST(Singleton, SymmetricSmithWeights) {
  const Envelope env(obs_of({-1.0, 1.0}, {1.0, 1.0}), smith());
  for (std::size_t i : {0u, 1u}) {
    const SingletonWeight s = singleton_region_and_weight(env, i);
    EXPECT_NEAR(s.weight, kSingleton, 1e-8);
    ASSERT_EQ(s.regions.size(), 1u);
    ASSERT_EQ(s.regions[0].region.size(), 1u);
  }
  const SingletonWeight left = singleton_region_and_weight(env, 0);
  EXPECT_EQ(left.regions[0].region[0].lo, -7.0);
  EXPECT_NEAR(left.regions[0].region[0].hi, 0.0, 1e-12);
}

TEST(Singleton, ScalesWithInverseSquareValue) {
  const Envelope a(obs_of({-1.0, 1.0}, {1.0, 1.0}), smith());
  const Envelope b(obs_of({-1.0, 1.0}, {3.0, 3.0}), smith());
  EXPECT_NEAR(singleton_region_and_weight(b, 0).weight,
              singleton_region_and_weight(a, 0).weight / 9.0, 1e-12);
}

TEST(Singleton, DominatedCurveHasNoRegion) {
  const double z1 = std::exp(0.5);  // curve 1 meets both others at x = 0 only
  const Envelope env(obs_of({-1.0, 0.0, 1.0}, {1.0, z1, 1.0}), smith());
  EXPECT_NEAR(singleton_region_and_weight(env, 1).weight, 0.0, 1e-12);
}

TEST(GroupByTolerance, AbsoluteAndRelativeBounds) {
  const std::vector<double> v{1.0, 1.005, 1.02};
  EXPECT_EQ(group_by_tolerance(v, 0.01, 1e-9), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(group_by_tolerance(v, 0.0, 1e-9), (std::vector<std::size_t>{0}));
  const std::vector<double> big{100.0, 100.5};
  EXPECT_EQ(group_by_tolerance(big, 0.01, 1e-9), (std::vector<std::size_t>{0}));
  const std::vector<double> tie{2.0, 2.0 * (1 + 1e-12), kInf};
  EXPECT_EQ(group_by_tolerance(tie, 0.0, 1e-9), (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(group_by_tolerance(v, -1.0, 0.0), InvalidArgument);
}

TEST(GroupedIntersections, TriplePointIsReportedOnce) {
  const double z1 = std::exp(0.5);
  const Envelope env(obs_of({-1.0, 0.0, 1.0}, {1.0, z1, 1.0}), smith());
  const auto hits = grouped_intersections(env, 1e-6);
  std::size_t triples = 0;
  for (const auto& h : hits) {
    if (h.members.size() == 3) {
      ++triples;
      EXPECT_TRUE(h.exact);
      EXPECT_NEAR(h.point.x0, 0.0, 1e-9);
      EXPECT_NEAR(h.point.y0, kY0, 1e-8);
    }
  }
  EXPECT_EQ(triples, 1u);
}

TEST(GroupedIntersections, LooseToleranceMergesNearbyCurve) {
  // curve 1 passes slightly above the (0, 2) crossing
  const double z1 = std::exp(0.5) * 1.001;
  const Envelope env(obs_of({-1.0, 0.0, 1.0}, {1.0, z1, 1.0}), smith());
  bool found = false;
  for (const auto& h : grouped_intersections(env, 1e-2)) {
    if (h.members.size() == 3) {
      found = true;
      EXPECT_FALSE(h.exact);
    }
  }
  EXPECT_TRUE(found);
  for (const auto& h : grouped_intersections(env, 1e-6)) EXPECT_EQ(h.members.size(), 2u);
}

TEST(RegionSampler, MatchesTruncatedGaussian) {
  const Envelope env(obs_of({-1.0, 1.0}, {1.0, 1.0}), smith());
  const SingletonWeight s = singleton_region_and_weight(env, 0);
  const auto sampler = region_sampler(smith_shape(), -1.0, s.regions[0].region, 0.005);
  EXPECT_NEAR(sampler.total_mass(), s.regions[0].integral, 1e-5);
  Rng rng = make_rng(11);
  std::vector<double> x;
  for (int k = 0; k < 20000; ++k) x.push_back(sampler.sample(rng));
  const double norm = normal_cdf(6.0) - normal_cdf(-1.0);
  const double ks = ks_statistic(x, [&](double v) {
    if (v >= 0.0) return 1.0;
    return (normal_cdf(6.0) - normal_cdf(-1.0 - v)) / norm;
  });
  EXPECT_LT(ks, 0.012);
}

TEST(RegionSampler, TabulatedCellsFollowKnots) {
  const ShapeDescriptor tent = TabulatedShape({-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0});
  const auto sampler = region_sampler(tent, 0.0, {{-1.0, 1.0}}, 0.5);
  EXPECT_NEAR(sampler.total_mass(), 1.0, 1e-15);
}

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "m3/conditional.hpp"

using namespace m3;

namespace {

std::shared_ptr<const ShapeFamily> smith() {
  return std::make_shared<const ShapeFamily>(build_smith_family());
}

// Bivariate exponent measure of the Smith field at lag h.
double smith_exponent(double x, double y, double h) {
  return normal_cdf(h / 2 + std::log(y / x) / h) / x + normal_cdf(h / 2 + std::log(x / y) / h) / y;
}

// P(Z(h) <= y | Z(0) = z) from the bivariate law.
double smith_conditional_cdf(double y, double z, double h) {
  const double e = 1e-6 * z;
  const double dv = (smith_exponent(z + e, y, h) - smith_exponent(z - e, y, h)) / (2 * e);
  return std::exp(-smith_exponent(z, y, h) + 1.0 / z) * (-dv) * z * z;
}

}  // namespace

TEST(ConditionalSampler, InterpolatesDataExactly) {
  const std::vector<double> t{-2.0, -1.0, 1.0, 2.0};
  const ShapeLaw law(smith());
  Rng rng = make_rng(31);
  for (int r = 0; r < 20; ++r) {
    const auto z = simulate_max_field(law, t, SimWindow::covering(t, 6.0), rng).values;
    const ConditionalSampler s(canonicalize_observations(t, z), smith());
    const std::vector<double> eval{-2.0, -1.0, 0.0, 1.0, 2.0, 3.3};
    for (int d = 0; d < 20; ++d) {
      const auto v = s.draw(eval, rng);
      ASSERT_EQ(v[0], z[0]);
      ASSERT_EQ(v[1], z[1]);
      ASSERT_EQ(v[3], z[2]);
      ASSERT_EQ(v[4], z[3]);
      ASSERT_GT(v[2], 0.0);
      ASSERT_GT(v[5], 0.0);
    }
  }
}

TEST(ConditionalSampler, HybridInterpolatesDataExactly) {
  const std::vector<double> t{-2.0, -1.0, 1.0, 2.0};
  const std::vector<double> z{0.7, 1.9, 0.4, 3.0};
  const BrShapeConfig grid = BrShapeConfig::uniform(-5.0, 5.0, 0.1);
  Rng rng = make_rng(32);
  const ConditionalSampler s = make_hybrid_sampler(
      canonicalize_observations(t, z), [&](Rng& r) { return sample_br_shape(grid, r); }, 100,
      ShapeLaw(BrShapeConfig::uniform(-20.0, 20.0, 0.1)), rng);
  for (int d = 0; d < 50; ++d) {
    const auto v = s.draw(t, rng);
    for (std::size_t i = 0; i < t.size(); ++i) ASSERT_EQ(v[i], z[i]);
  }
}

TEST(ConditionalSampler, DrawInfoRecordsGenerators) {
  const std::vector<double> t{-1.0, 1.0};
  const std::vector<double> z{1.0, 1.0};
  const ConditionalSampler s(canonicalize_observations(t, z), smith());
  Rng rng = make_rng(33);
  DrawInfo info;
  for (int d = 0; d < 50; ++d) {
    s.draw(std::vector<double>{0.0}, rng, &info);
    ASSERT_EQ(info.generators.size(), info.scenario == 0 ? 2u : 1u);
    ASSERT_LE(info.free.retained, info.free.generated);
  }
}

TEST(ConditionalSampler, ReproducibleForEqualSeeds) {
  const std::vector<double> t{-1.0, 1.0};
  const std::vector<double> z{1.0, 2.0};
  const ConditionalSampler s(canonicalize_observations(t, z), smith());
  Rng a = make_rng(34);
  Rng b = make_rng(34);
  const auto pa = predictive_distribution(s, 0.0, 50, a);
  const auto pb = predictive_distribution(s, 0.0, 50, b);
  EXPECT_EQ(pa.draws, pb.draws);
  EXPECT_EQ(pa.site, 0.0);
  EXPECT_THROW(predictive_distribution(s, 0.0, 0, a), InvalidCount);
}

TEST(ConditionalSampler, SingleSiteMatchesBivariateLaw) {
  const std::vector<double> t{0.0};
  const double z = 1.3;
  const std::vector<double> zv{z};
  const ConditionalSampler s(canonicalize_observations(t, zv), smith());
  Rng rng = make_rng(35);
  const double h = 1.0;
  const auto p = predictive_distribution(s, h, 6000, rng);
  const double ks =
      ks_statistic(p.draws, [&](double y) { return y <= 0 ? 0.0 : smith_conditional_cdf(y, z, h); });
  EXPECT_LT(ks, 0.025);
}

TEST(ConditionalSampler, DistantSiteIsUnconditionallyFrechet) {
  const std::vector<double> t{0.0};
  const std::vector<double> zv{2.0};
  const ConditionalSampler s(canonicalize_observations(t, zv), smith());
  Rng rng = make_rng(36);
  const auto p = predictive_distribution(s, 20.0, 4000, rng);
  EXPECT_LT(frechet_ks(p.draws), 0.03);
}

TEST(ConditionalSampler, QuantileIsLowerOrderStatistic) {
  EmpiricalPredictive p;
  p.draws = {3.0, 1.0, 2.0, 4.0};
  EXPECT_EQ(conditional_quantile(p, 0.5), 2.0);
}

TEST(ConditionalSampler, ConvenienceDrawMatchesSampler) {
  const std::vector<double> t{-1.0, 1.0};
  const std::vector<double> z{1.0, 2.0};
  const std::vector<double> eval{-1.0, 0.0};
  Rng a = make_rng(37);
  Rng b = make_rng(37);
  const auto v1 = conditional_draw(canonicalize_observations(t, z), smith(), eval, a);
  const auto v2 = ConditionalSampler(canonicalize_observations(t, z), smith()).draw(eval, b);
  EXPECT_EQ(v1, v2);
  EXPECT_EQ(v1[0], 1.0);
}

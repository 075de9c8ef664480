#include "m3/conditional.hpp"

#include <algorithm>
#include <cmath>

namespace m3 {

ConditionalSampler::ConditionalSampler(const Observations& obs,
                                       std::shared_ptr<const ShapeFamily> generators,
                                       ShapeLaw free_law, ConditionalOptions options)
    : free_law_(std::move(free_law)), options_(options) {
  auto env = std::make_shared<const Envelope>(obs, std::move(generators), options_.tol);
  table_ = std::make_shared<const ScenarioTable>(std::move(env), options_.epsilon);
}

ConditionalSampler::ConditionalSampler(const Observations& obs,
                                       std::shared_ptr<const ShapeFamily> family,
                                       ConditionalOptions options)
    : ConditionalSampler(obs, family, ShapeLaw(family), options) {}

std::vector<double> ConditionalSampler::draw(std::span<const double> eval_sites, Rng& rng,
                                             DrawInfo* info) const {
  // Separate streams for the generating and the free atoms.
  Rng gen_rng(rng());
  Rng free_rng(rng());

  const Observations& data = obs();
  const ShapeFamily& family = table_->envelope().family();
  const std::size_t scenario = table_->sample_scenario(gen_rng);
  std::vector<Atom> atoms = table_->sample_generators(scenario, gen_rng);

  std::vector<double> current(eval_sites.size(), 0.0);
  for (const Atom& a : atoms) {
    for (std::size_t k = 0; k < eval_sites.size(); ++k) {
      current[k] = std::max(current[k], a.u * family.value(a.shape_id, eval_sites[k] - a.s));
    }
  }
  // Values at conditioning sites are z_i up to rounding of z / f * f.
  for (std::size_t k = 0; k < eval_sites.size(); ++k) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (eval_sites[k] == data.site(i) &&
          std::abs(current[k] - data.value(i)) <= 1e-9 * data.value(i)) {
        current[k] = data.value(i);
      }
    }
  }

  std::vector<double> all_sites(data.sites().begin(), data.sites().end());
  all_sites.insert(all_sites.end(), eval_sites.begin(), eval_sites.end());
  const double radius = std::max(free_law_.support_radius(), family.support_radius());
  const SimWindow window = SimWindow::covering(all_sites, radius);
  FreeStats stats = raise_with_free_points(free_law_, data, window, eval_sites, current,
                                           options_.floor_factor, free_rng);
  if (info != nullptr) {
    info->scenario = scenario;
    info->generators = std::move(atoms);
    info->free = stats;
  }
  return current;
}

std::vector<double> conditional_draw(const Observations& obs,
                                     std::shared_ptr<const ShapeFamily> family,
                                     std::span<const double> eval_sites, Rng& rng,
                                     ConditionalOptions options) {
  return ConditionalSampler(obs, std::move(family), options).draw(eval_sites, rng);
}

EmpiricalPredictive predictive_distribution(const ConditionalSampler& sampler, double t0,
                                            std::size_t n_draws, Rng& rng) {
  if (n_draws == 0) throw InvalidCount("predictive distribution needs at least one draw");
  EmpiricalPredictive out;
  out.site = t0;
  out.draws.reserve(n_draws);
  const double site[1] = {t0};
  for (std::size_t d = 0; d < n_draws; ++d) out.draws.push_back(sampler.draw(site, rng)[0]);
  return out;
}

double conditional_quantile(const EmpiricalPredictive& predictive, double q) {
  return lower_quantile(predictive.draws, q);
}

ConditionalSampler make_hybrid_sampler(const Observations& obs, const ShapeSampler& shape_sampler,
                                       std::size_t n_shapes, ShapeLaw full_law, Rng& rng,
                                       ConditionalOptions options) {
  auto family = std::make_shared<const ShapeFamily>(
      build_empirical_family(n_shapes, shape_sampler, rng));
  return ConditionalSampler(obs, std::move(family), std::move(full_law), options);
}

std::vector<double> hybrid_draw(const Observations& obs, const ShapeSampler& shape_sampler,
                                std::size_t n_shapes, ShapeLaw full_law,
                                std::span<const double> eval_sites, Rng& rng,
                                ConditionalOptions options) {
  return make_hybrid_sampler(obs, shape_sampler, n_shapes, std::move(full_law), rng, options)
      .draw(eval_sites, rng);
}

}  // namespace m3

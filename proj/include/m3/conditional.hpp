#pragma once

// Conditional sampling: scenario, generating atoms, then independent free
// atoms below the curves; the field is the maximum over both.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "m3/core.hpp"
#include "m3/geometry.hpp"
#include "m3/numerics.hpp"
#include "m3/scenario.hpp"
#include "m3/shapes.hpp"
#include "m3/uncond_sim.hpp"

namespace m3 {

struct ConditionalOptions {
  double epsilon = 1e-6;
  double floor_factor = 1.0;  // free atoms stop below floor_factor * current minimum
  Tolerances tol;
};

struct DrawInfo {
  std::size_t scenario = 0;
  std::vector<Atom> generators;
  FreeStats free;
};

class ConditionalSampler {
 public:
  /// Generating atoms from `generators`, free atoms from `free_law`.
  ConditionalSampler(const Observations& obs, std::shared_ptr<const ShapeFamily> generators,
                     ShapeLaw free_law, ConditionalOptions options = {});
  /// Exact sampler for a finite family.
  ConditionalSampler(const Observations& obs, std::shared_ptr<const ShapeFamily> family,
                     ConditionalOptions options = {});

  [[nodiscard]] const Observations& obs() const noexcept { return table_->envelope().obs(); }
  [[nodiscard]] const ScenarioTable& table() const noexcept { return *table_; }
  [[nodiscard]] const ShapeLaw& free_law() const noexcept { return free_law_; }
  [[nodiscard]] const ConditionalOptions& options() const noexcept { return options_; }

  /// Field values at `eval_sites` for one conditional draw.
  std::vector<double> draw(std::span<const double> eval_sites, Rng& rng,
                           DrawInfo* info = nullptr) const;

 private:
  std::shared_ptr<const ScenarioTable> table_;
  ShapeLaw free_law_;
  ConditionalOptions options_;
};

/// One conditional draw at `eval_sites` for a finite family.
std::vector<double> conditional_draw(const Observations& obs,
                                     std::shared_ptr<const ShapeFamily> family,
                                     std::span<const double> eval_sites, Rng& rng,
                                     ConditionalOptions options = {});

/// `n_draws` independent conditional values at t0.
EmpiricalPredictive predictive_distribution(const ConditionalSampler& sampler, double t0,
                                            std::size_t n_draws, Rng& rng);

/// Lower empirical quantile.
double conditional_quantile(const EmpiricalPredictive& predictive, double q);

/// Sampler whose generating atoms come from N shapes drawn with
/// `shape_sampler`, and whose free atoms come from `full_law`.
ConditionalSampler make_hybrid_sampler(const Observations& obs, const ShapeSampler& shape_sampler,
                                       std::size_t n_shapes, ShapeLaw full_law, Rng& rng,
                                       ConditionalOptions options = {});

/// One hybrid draw: fresh N-family, then a conditional draw.
std::vector<double> hybrid_draw(const Observations& obs, const ShapeSampler& shape_sampler,
                                std::size_t n_shapes, ShapeLaw full_law,
                                std::span<const double> eval_sites, Rng& rng,
                                ConditionalOptions options = {});

}  // namespace m3

#pragma once

// Replicated comparison studies: simulate a truth, predict the value at t0
// from the remaining sites with every method, score on the log scale.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "m3/core.hpp"
#include "m3/discrete.hpp"
#include "m3/numerics.hpp"
#include "m3/scoring.hpp"
#include "m3/shapes.hpp"

namespace m3 {

struct GridSpec {
  double lo = -5.0;
  double hi = 5.0;
  double step = 0.1;
  [[nodiscard]] BrShapeConfig to_config() const { return BrShapeConfig::uniform(lo, hi, step); }
};

struct ModelConfig {
  std::string model = "smith";  // smith | brown_resnick | discrete
  double smith_radius = 6.0;
  GridSpec truth_grid{-20.0, 20.0, 0.1};   // Brown-Resnick truth
  GridSpec family_grid{-5.0, 5.0, 0.1};    // N generating shapes
  GridSpec free_grid{-20.0, 20.0, 0.1};    // free atoms of the hybrid sampler
  std::size_t n_shapes = 250;
  LatticeSpec lattice;
};

struct MethodSpec {
  std::string method = "ppp";  // ppp | gt
  std::string label;
  double epsilon = 1e-6;
};

struct GtSettings {
  std::size_t fit_samples = 500;
  std::vector<double> fit_sites;  // empty: regular grid of step 0.5 over sites and t0
  std::vector<double> nu_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0};
  std::vector<double> c_grid{0.05, 0.1, 0.15, 0.2, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0};
};

struct StudyConfig {
  ModelConfig model;
  std::vector<double> sites;
  double t0 = 0.0;
  std::size_t replicates = 1000;
  std::size_t draws = 100;
  std::vector<MethodSpec> methods;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double floor_factor = 1.0;
  GtSettings gt;
  Tolerances tol;
};

struct MethodResult {
  std::string label;
  MeanScores scores;
  std::size_t failures = 0;
  std::map<std::string, std::size_t> errors;
  std::vector<double> crps;        // NaN where the method failed
  std::vector<double> abs_error;
  std::vector<std::string> error_names;
  double seconds = 0.0;
};

struct StudyReport {
  std::vector<double> log_truth;
  std::vector<MethodResult> methods;
  CovarianceFit gt_fit;
  bool has_gt_fit = false;
  double seconds = 0.0;
};

/// Law of the truth field for a continuous model.
ShapeLaw truth_law(const ModelConfig& model);

/// Unconditional values at `sites` for any model.
std::vector<double> simulate_truth(const ModelConfig& model, std::span<const double> sites,
                                   Rng& rng);

/// Covariance fit of psi-transformed unconditional fields for the GT baseline.
CovarianceFit fit_gt_covariance(const StudyConfig& config);

/// Predictive sample at t0 for one method.
EmpiricalPredictive predict(const StudyConfig& config, const MethodSpec& method,
                            const Observations& obs, const CovarianceFit& fit, Rng& rng);

StudyReport run_study(const StudyConfig& config);

}  // namespace m3

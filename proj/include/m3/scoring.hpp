#pragma once

// Scores of empirical predictive laws and the Gaussian-transform baseline.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "m3/core.hpp"
#include "m3/numerics.hpp"

namespace m3 {

/// 1/2 E|X - X'| - E|X - x| over the empirical law of `draws` (larger is better).
double crps(std::span<const double> draws, double x);
double crps(const EmpiricalPredictive& predictive, double x);

struct MeanScores {
  double crps = 0.0;
  double mae = 0.0;
  std::size_t count = 0;
};

/// Arithmetic means of per-replicate CRPS values and absolute median errors.
MeanScores mean_scores(std::span<const double> crps_values, std::span<const double> abs_errors);

/// Frechet to Gaussian margins: Phi^-1(exp(-1/x)), and its inverse.
double psi(double x);
double psi_inv(double y);

/// Whittle-Matern correlation (c h)^nu / (2^(nu-1) Gamma(nu)) K_nu(c h), 1 at h = 0.
double whittle_matern(double h, double nu, double c);

using Correlation = std::function<double(double)>;

struct CovarianceFit {
  double nu = 0.0;
  double c = 0.0;
  double log_likelihood = 0.0;
};

/// Grid search of the zero-mean unit-variance Gaussian log-likelihood of
/// `samples` (rows are independent realizations at `sites`).
CovarianceFit fit_covariance(const std::vector<std::vector<double>>& samples,
                             std::span<const double> sites, std::span<const double> nu_grid,
                             std::span<const double> c_grid);

struct GaussianPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Simple kriging of psi(z) at t0 under `corr`. Throws SingularCovarianceError.
GaussianPrediction gt_kriging(const Observations& obs, double t0, const Correlation& corr);

/// `n_draws` back-transformed draws of the kriging law at t0.
EmpiricalPredictive gt_conditional(const Observations& obs, double t0, const Correlation& corr,
                                   std::size_t n_draws, Rng& rng);

}  // namespace m3

#include "m3/scoring.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace m3 {

double crps(std::span<const double> draws, double x) {
  if (draws.empty()) throw InvalidArgument("CRPS of an empty predictive");
  std::vector<double> d(draws.begin(), draws.end());
  std::sort(d.begin(), d.end());
  const double m = static_cast<double>(d.size());
  double spread = 0.0;
  double miss = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    spread += (2.0 * static_cast<double>(i + 1) - m - 1.0) * d[i];
    miss += std::abs(d[i] - x);
  }
  return spread / (m * m) - miss / m;
}

double crps(const EmpiricalPredictive& predictive, double x) { return crps(predictive.draws, x); }

MeanScores mean_scores(std::span<const double> crps_values, std::span<const double> abs_errors) {
  if (crps_values.empty() || crps_values.size() != abs_errors.size()) {
    throw InvalidArgument("need matching, nonempty score lists");
  }
  MeanScores out;
  out.count = crps_values.size();
  for (std::size_t k = 0; k < out.count; ++k) {
    out.crps += crps_values[k];
    out.mae += abs_errors[k];
  }
  out.crps /= static_cast<double>(out.count);
  out.mae /= static_cast<double>(out.count);
  return out;
}

namespace {

// log Phi(y), with the asymptotic series once Phi underflows
double log_normal_cdf(double y) {
  if (y >= 0.0) return std::log1p(-normal_sf(y));
  if (y > -30.0) return std::log(normal_cdf(y));
  const double r = 1.0 / (y * y);
  return -0.5 * y * y - std::log(-y) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(r * (-1.0 + r * (3.0 + r * (-15.0 + r * 105.0))));
}

}  // namespace

double psi(double x) {
  if (!(x > 0.0)) throw InvalidArgument("psi needs a positive argument");
  const double a = 1.0 / x;
  if (a > 600.0) {
    // Newton on log Phi(y) = -a
    double y = -std::sqrt(2.0 * a);
    for (int k = 0; k < 50; ++k) {
      const double lc = log_normal_cdf(y);
      const double mills = std::exp(-0.5 * y * y - 0.5 * std::log(2.0 * std::numbers::pi) - lc);
      const double step = (lc + a) / mills;
      y -= step;
      if (std::abs(step) <= 1e-15 * std::abs(y)) break;
    }
    return y;
  }
  const double p = std::exp(-a);
  if (p <= 0.5) return normal_quantile(p);
  return normal_quantile_upper(-std::expm1(-a));
}

double psi_inv(double y) { return -1.0 / log_normal_cdf(y); }

double whittle_matern(double h, double nu, double c) {
  if (!(nu > 0.0) || !(c > 0.0)) throw InvalidArgument("Matern parameters must be positive");
  const double x = c * std::abs(h);
  if (x == 0.0) return 1.0;
  if (x > 700.0) return 0.0;
  const double k = std::cyl_bessel_k(nu, x);
  return std::exp(nu * std::log(x) - (nu - 1.0) * std::numbers::ln2 - std::lgamma(nu)) * k;
}

namespace {

Eigen::MatrixXd correlation_matrix(std::span<const double> sites, const Correlation& corr) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      C(a, b) = C(b, a) = a == b ? 1.0 : corr(sites[a] - sites[b]);
    }
  }
  return C;
}

}  // namespace

CovarianceFit fit_covariance(const std::vector<std::vector<double>>& samples,
                             std::span<const double> sites, std::span<const double> nu_grid,
                             std::span<const double> c_grid) {
  if (samples.empty() || nu_grid.empty() || c_grid.empty()) {
    throw InvalidArgument("covariance fit needs samples and a parameter grid");
  }
  const auto n = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd Y(n, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t r = 0; r < samples.size(); ++r) {
    if (samples[r].size() != sites.size()) throw InvalidArgument("sample length mismatch");
    for (Eigen::Index a = 0; a < n; ++a) Y(a, static_cast<Eigen::Index>(r)) = samples[r][a];
  }
  CovarianceFit best;
  best.log_likelihood = -kInf;
  for (double nu : nu_grid) {
    for (double c : c_grid) {
      const Eigen::MatrixXd C =
          correlation_matrix(sites, [&](double h) { return whittle_matern(h, nu, c); });
      Eigen::LLT<Eigen::MatrixXd> llt(C);
      if (llt.info() != Eigen::Success) continue;
      const Eigen::MatrixXd L = llt.matrixL();
      double logdet = 0.0;
      bool ok = true;
      for (Eigen::Index a = 0; a < n; ++a) {
        ok = ok && L(a, a) > 0.0;
        logdet += 2.0 * std::log(L(a, a));
      }
      if (!ok) continue;
      const Eigen::MatrixXd W = llt.matrixL().solve(Y);
      const double quad = W.squaredNorm();
      const double ll = -0.5 * (static_cast<double>(samples.size()) * logdet + quad);
      if (ll > best.log_likelihood) best = {nu, c, ll};
    }
  }
  if (best.log_likelihood == -kInf) {
    throw SingularCovarianceError("no grid point gives a positive definite correlation matrix");
  }
  return best;
}

GaussianPrediction gt_kriging(const Observations& obs, double t0, const Correlation& corr) {
  GaussianPrediction out;
  const std::size_t n = obs.size();
  if (n == 0) return {0.0, 1.0};
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::VectorXd k(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    y(static_cast<Eigen::Index>(i)) = psi(obs.value(i));
    if (obs.site(i) == t0) return {psi(obs.value(i)), 0.0};
    k(static_cast<Eigen::Index>(i)) = corr(t0 - obs.site(i));
  }
  const Eigen::MatrixXd C = correlation_matrix(obs.sites(), corr);
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) {
    throw SingularCovarianceError("observation correlation matrix is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  for (Eigen::Index a = 0; a < L.rows(); ++a) {
    if (!(L(a, a) > 1e-12)) throw SingularCovarianceError("correlation matrix is singular");
  }
  const Eigen::VectorXd alpha = llt.solve(y);
  const Eigen::VectorXd beta = llt.solve(k);
  out.mean = k.dot(alpha);
  out.variance = std::clamp(1.0 - k.dot(beta), 0.0, 1.0);
  return out;
}

EmpiricalPredictive gt_conditional(const Observations& obs, double t0, const Correlation& corr,
                                   std::size_t n_draws, Rng& rng) {
  if (n_draws == 0) throw InvalidCount("need at least one draw");
  EmpiricalPredictive out;
  out.site = t0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs.site(i) == t0) {
      out.draws.assign(n_draws, obs.value(i));
      return out;
    }
  }
  const GaussianPrediction g = gt_kriging(obs, t0, corr);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(g.variance);
  for (std::size_t d = 0; d < n_draws; ++d) out.draws.push_back(psi_inv(g.mean + sd * normal(rng)));
  return out;
}

}  // namespace m3

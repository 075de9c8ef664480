#include "m3/study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>

#include "m3/conditional.hpp"
#include "m3/uncond_sim.hpp"

namespace m3 {

namespace {

constexpr std::uint64_t kTruthStream = 0;
constexpr std::uint64_t kFitReplicate = std::numeric_limits<std::uint64_t>::max();

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::shared_ptr<const ShapeFamily> smith_family(const ModelConfig& model) {
  return std::make_shared<const ShapeFamily>(build_smith_family(model.smith_radius));
}

}  // namespace

ShapeLaw truth_law(const ModelConfig& model) {
  if (model.model == "smith") return ShapeLaw(smith_family(model));
  if (model.model == "brown_resnick") return ShapeLaw(model.truth_grid.to_config());
  throw InvalidArgument("model '" + model.model + "' has no continuous shape law");
}

std::vector<double> simulate_truth(const ModelConfig& model, std::span<const double> sites,
                                   Rng& rng) {
  if (model.model == "discrete") return simulate_discrete(model.lattice, sites, rng).values;
  const ShapeLaw law = truth_law(model);
  return simulate_max_field(law, sites, SimWindow::covering(sites, law.support_radius()), rng)
      .values;
}

CovarianceFit fit_gt_covariance(const StudyConfig& config) {
  std::vector<double> fit_sites = config.gt.fit_sites;
  if (fit_sites.empty()) {
    double lo = config.t0;
    double hi = config.t0;
    for (double t : config.sites) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    const auto steps = static_cast<long>(std::llround((hi - lo) / 0.5));
    for (long k = 0; k <= steps; ++k) fit_sites.push_back(lo + 0.5 * static_cast<double>(k));
    if (config.model.model == "discrete") {
      fit_sites.clear();
      for (double t = lo; t <= hi + 1e-9; t += config.model.lattice.pitch) fit_sites.push_back(t);
    }
  }
  std::vector<std::vector<double>> samples;
  Rng rng = make_rng(config.seed, kFitReplicate, 0);
  for (std::size_t r = 0; r < config.gt.fit_samples; ++r) {
    std::vector<double> z = simulate_truth(config.model, fit_sites, rng);
    for (double& v : z) v = psi(v);
    samples.push_back(std::move(z));
  }
  return fit_covariance(samples, fit_sites, config.gt.nu_grid, config.gt.c_grid);
}

EmpiricalPredictive predict(const StudyConfig& config, const MethodSpec& method,
                            const Observations& obs, const CovarianceFit& fit, Rng& rng) {
  const ModelConfig& model = config.model;
  if (method.method == "gt") {
    const double nu = fit.nu;
    const double c = fit.c;
    return gt_conditional(obs, config.t0, [=](double h) { return whittle_matern(h, nu, c); },
                          config.draws, rng);
  }
  if (method.method != "ppp") throw InvalidArgument("unknown method '" + method.method + "'");

  if (model.model == "discrete") {
    return discrete_condition(model.lattice, obs, config.t0, config.draws, rng).predictive;
  }
  ConditionalOptions opt;
  opt.epsilon = method.epsilon;
  opt.floor_factor = config.floor_factor;
  opt.tol = config.tol;
  if (model.model == "smith") {
    const ConditionalSampler sampler(obs, smith_family(model), opt);
    return predictive_distribution(sampler, config.t0, config.draws, rng);
  }
  const BrShapeConfig family_grid = model.family_grid.to_config();
  const ShapeSampler shapes = [&](Rng& r) { return sample_br_shape(family_grid, r); };
  const ConditionalSampler sampler = make_hybrid_sampler(
      obs, shapes, model.n_shapes, ShapeLaw(model.free_grid.to_config()), rng, opt);
  return predictive_distribution(sampler, config.t0, config.draws, rng);
}

StudyReport run_study(const StudyConfig& config) {
  if (config.replicates == 0) throw InvalidCount("study needs at least one replicate");
  if (config.methods.empty()) throw InvalidArgument("study needs at least one method");
  const auto start = std::chrono::steady_clock::now();
  StudyReport report;

  const bool needs_fit = std::any_of(config.methods.begin(), config.methods.end(),
                                     [](const MethodSpec& m) { return m.method == "gt"; });
  if (needs_fit) {
    report.gt_fit = fit_gt_covariance(config);
    report.has_gt_fit = true;
  }

  const std::size_t K = config.replicates;
  const std::size_t M = config.methods.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.log_truth.assign(K, nan);
  report.methods.resize(M);
  for (std::size_t m = 0; m < M; ++m) {
    MethodResult& res = report.methods[m];
    res.label = config.methods[m].label.empty() ? config.methods[m].method : config.methods[m].label;
    res.crps.assign(K, nan);
    res.abs_error.assign(K, nan);
    res.error_names.assign(K, "");
  }
  std::vector<std::vector<double>> method_seconds(M, std::vector<double>(K, 0.0));

  std::vector<double> all_sites = config.sites;
  all_sites.push_back(config.t0);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t r = next++; r < K; r = next++) {
      Rng truth_rng = make_rng(config.seed, r, kTruthStream);
      const std::vector<double> z = simulate_truth(config.model, all_sites, truth_rng);
      const double log_truth = std::log(z.back());
      report.log_truth[r] = log_truth;
      const Observations obs =
          canonicalize_observations(config.sites, std::span(z.data(), config.sites.size()));
      for (std::size_t m = 0; m < M; ++m) {
        const auto t = std::chrono::steady_clock::now();
        Rng rng = make_rng(config.seed, r, m + 1);
        MethodResult& res = report.methods[m];
        try {
          EmpiricalPredictive pred = predict(config, config.methods[m], obs, report.gt_fit, rng);
          for (double& d : pred.draws) d = std::log(d);
          res.crps[r] = crps(pred, log_truth);
          res.abs_error[r] = std::abs(lower_quantile(pred.draws, 0.5) - log_truth);
        } catch (const Error& e) {
          res.error_names[r] = e.name();
        }
        method_seconds[m][r] = seconds_since(t);
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(config.threads, K));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (std::size_t m = 0; m < M; ++m) {
    MethodResult& res = report.methods[m];
    std::vector<double> c, a;
    for (std::size_t r = 0; r < K; ++r) {
      if (!res.error_names[r].empty()) {
        ++res.failures;
        ++res.errors[res.error_names[r]];
        continue;
      }
      c.push_back(res.crps[r]);
      a.push_back(res.abs_error[r]);
    }
    if (!c.empty()) res.scores = mean_scores(c, a);
    for (double s : method_seconds[m]) res.seconds += s;
  }
  report.seconds = seconds_since(start);
  return report;
}

}  // namespace m3

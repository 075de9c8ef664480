#include "m3/uncond_sim.hpp"

#include <algorithm>
#include <cmath>

namespace m3 {

SimWindow SimWindow::covering(std::span<const double> sites, double radius) {
  if (sites.empty()) throw InvalidArgument("window needs at least one site");
  const auto [lo, hi] = std::minmax_element(sites.begin(), sites.end());
  return {*lo - radius, *hi + radius, 0.0};
}

void check_window(const SimWindow& window, std::span<const double> sites, double radius) {
  if (!(window.b > window.a)) throw WindowTooSmall("window must satisfy a < b");
  const double slack = 1e-12 * (1.0 + std::abs(window.a) + std::abs(window.b));
  for (double t : sites) {
    if (t - radius < window.a - slack || t + radius > window.b + slack) {
      throw WindowTooSmall("window does not cover site " + std::to_string(t) +
                           " inflated by the support radius");
    }
  }
}

double PoissonStream::next() {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  gamma_ += expo(rng_);
  u_ = window_.length() / gamma_;
  s_ = window_.a + window_.length() * unif(rng_);
  ++count_;
  return u_;
}

std::size_t draw_shape_values(const ShapeLaw& law, std::span<const double> offsets, Rng& rng,
                              std::span<double> out) {
  if (law.finite()) {
    const std::size_t id = law.family().sample_index(rng);
    const ShapeDescriptor& f = law.family().shape(id);
    for (std::size_t k = 0; k < offsets.size(); ++k) out[k] = f.value(offsets[k]);
    return id;
  }
  sample_br_values(law.br_config(), offsets, rng, out);
  return 0;
}

FieldDraw simulate_max_field(const ShapeLaw& law, std::span<const double> eval_sites,
                             const SimWindow& window, Rng& rng) {
  if (!(law.sup_bound() > 0.0)) throw DegenerateFamily("shape family has sup bound 0");
  if (eval_sites.empty()) throw InvalidArgument("no evaluation sites");
  check_window(window, eval_sites, law.support_radius());

  const std::size_t n = eval_sites.size();
  FieldDraw out;
  out.values.assign(n, 0.0);
  out.generator.assign(n, 0);
  std::vector<double> offsets(n), vals(n);
  PoissonStream stream(window, rng);
  double lowest = 0.0;
  for (;;) {
    const double u = stream.next();
    if (u * law.sup_bound() < lowest || u < window.u_floor) {
      out.stop_level = u;
      break;
    }
    for (std::size_t k = 0; k < n; ++k) offsets[k] = eval_sites[k] - stream.s();
    const std::size_t id = draw_shape_values(law, offsets, rng, vals);
    bool touched = false;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = u * vals[k];
      if (v > out.values[k]) {
        out.values[k] = v;
        out.generator[k] = out.atoms.size();
        touched = true;
      }
    }
    out.atoms.push_back({stream.s(), u, id});
    if (touched) lowest = *std::min_element(out.values.begin(), out.values.end());
  }
  return out;
}

namespace {

// Offsets t_i - s for the observations followed by the evaluation sites.
void fill_offsets(const Observations& obs, std::span<const double> eval_sites, double s,
                  std::vector<double>& offsets) {
  const std::size_t n = obs.size();
  for (std::size_t i = 0; i < n; ++i) offsets[i] = obs.site(i) - s;
  for (std::size_t k = 0; k < eval_sites.size(); ++k) offsets[n + k] = eval_sites[k] - s;
}

bool below_curves(const Observations& obs, double u, std::span<const double> vals) {
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!(u * vals[i] < obs.value(i))) return false;
  }
  return true;
}

}  // namespace

std::vector<Atom> simulate_points_below(const ShapeLaw& law, const Observations& obs,
                                        const SimWindow& window, double floor, Rng& rng) {
  if (!(floor > 0.0)) throw InvalidArgument("relevance floor must be positive");
  if (!(law.sup_bound() > 0.0)) throw DegenerateFamily("shape family has sup bound 0");
  check_window(window, obs.sites(), law.support_radius());

  std::vector<Atom> kept;
  std::vector<double> offsets(obs.size()), vals(obs.size());
  PoissonStream stream(window, rng);
  for (;;) {
    const double u = stream.next();
    if (u * law.sup_bound() < floor || u < window.u_floor) break;
    fill_offsets(obs, {}, stream.s(), offsets);
    const std::size_t id = draw_shape_values(law, offsets, rng, vals);
    if (below_curves(obs, u, vals)) kept.push_back({stream.s(), u, id});
  }
  return kept;
}

FreeStats raise_with_free_points(const ShapeLaw& law, const Observations& obs,
                                 const SimWindow& window, std::span<const double> eval_sites,
                                 std::span<double> current, double floor_factor, Rng& rng) {
  if (!(law.sup_bound() > 0.0)) throw DegenerateFamily("shape family has sup bound 0");
  if (!(floor_factor > 0.0)) throw InvalidArgument("floor factor must be positive");
  check_window(window, obs.sites(), law.support_radius());
  check_window(window, eval_sites, law.support_radius());

  FreeStats stats;
  if (eval_sites.empty()) return stats;
  const std::size_t n = obs.size();
  std::vector<double> offsets(n + eval_sites.size()), vals(n + eval_sites.size());
  double lowest = *std::min_element(current.begin(), current.end());
  PoissonStream stream(window, rng);
  for (;;) {
    const double u = stream.next();
    if (u * law.sup_bound() < floor_factor * lowest || u < window.u_floor) {
      stats.stop_level = u;
      break;
    }
    fill_offsets(obs, eval_sites, stream.s(), offsets);
    draw_shape_values(law, offsets, rng, vals);
    if (!below_curves(obs, u, vals)) continue;
    ++stats.retained;
    bool touched = false;
    for (std::size_t k = 0; k < eval_sites.size(); ++k) {
      const double v = u * vals[n + k];
      if (v > current[k]) {
        current[k] = v;
        touched = true;
      }
    }
    if (touched) lowest = *std::min_element(current.begin(), current.end());
  }
  stats.generated = stream.count();
  return stats;
}

double frechet_ks(std::span<const double> samples) {
  if (samples.empty()) throw InvalidArgument("Frechet KS of an empty sample");
  return ks_statistic(std::vector<double>(samples.begin(), samples.end()),
                      [](double z) { return z > 0.0 ? std::exp(-1.0 / z) : 0.0; });
}

}  // namespace m3

#include "m3/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

namespace m3 {

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)); }

void sort_merge(std::vector<double>& xs) {
  std::sort(xs.begin(), xs.end());
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (out.empty() || !near(out.back(), x)) out.push_back(x);
  }
  xs = std::move(out);
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

struct Scan {
  std::vector<std::pair<double, double>> brackets;  // (lo, hi), sign change inside
  std::vector<double> lo_values;
  std::vector<double> zeros;
  [[nodiscard]] std::size_t count() const { return brackets.size() + zeros.size(); }
};

template <class G>
Scan scan_sign_changes(const G& g, double lo, double hi, std::size_t n) {
  Scan out;
  int prev_sign = 0;
  double prev_x = lo;
  double prev_g = 0.0;
  bool prev_zero = false;
  bool zero_since = false;
  for (std::size_t k = 0; k <= n; ++k) {
    const double x = k == n ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n);
    const double v = g(x);
    const int s = sign_of(v);
    if (s == 0) {
      if (prev_zero) throw IntervalIntersectionError("curves coincide on an interval");
      out.zeros.push_back(x);
      prev_zero = true;
      zero_since = true;
      continue;
    }
    if (prev_sign != 0 && s != prev_sign && !zero_since) {
      out.brackets.emplace_back(prev_x, x);
      out.lo_values.push_back(prev_g);
    }
    prev_sign = s;
    prev_x = x;
    prev_g = v;
    prev_zero = false;
    zero_since = false;
  }
  return out;
}

}  // namespace

std::vector<double> pair_roots(const ShapeDescriptor& f, double ti, double zi, double tj,
                               double zj, const Tolerances& tol) {
  const Interval sup = f.support();
  const double lo = std::max(ti - sup.hi, tj - sup.hi);
  const double hi = std::min(ti - sup.lo, tj - sup.lo);
  std::vector<double> roots;
  if (!(hi > lo)) return roots;
  auto g = [&](double x) { return f.value(ti - x) / zi - f.value(tj - x) / zj; };

  if (f.is_tabulated()) {
    std::vector<double> bps{lo, hi};
    for (double k : f.tabulated().knots()) {
      for (double x : {ti - k, tj - k}) {
        if (x > lo && x < hi) bps.push_back(x);
      }
    }
    sort_merge(bps);
    std::vector<double> gv(bps.size());
    for (std::size_t k = 0; k < bps.size(); ++k) gv[k] = g(bps[k]);
    for (std::size_t k = 0; k < bps.size(); ++k) {
      if (gv[k] == 0.0) {
        if (k + 1 < bps.size() && gv[k + 1] == 0.0) {
          throw IntervalIntersectionError("tabulated curves coincide on an interval");
        }
        roots.push_back(bps[k]);
      } else if (k + 1 < bps.size() && gv[k + 1] != 0.0 && (gv[k] < 0.0) != (gv[k + 1] < 0.0)) {
        const double a = bps[k];
        const double b = bps[k + 1];
        roots.push_back(a + (b - a) * gv[k] / (gv[k] - gv[k + 1]));
      }
    }
    sort_merge(roots);
    return roots;
  }

  std::size_t n = std::max<std::size_t>(tol.scan_points, 2);
  Scan scan = scan_sign_changes(g, lo, hi, n);
  int stable = 0;
  while (stable < 2 && 2 * n <= tol.max_scan_points) {
    n *= 2;
    Scan finer = scan_sign_changes(g, lo, hi, n);
    stable = finer.count() == scan.count() ? stable + 1 : 0;
    scan = std::move(finer);
  }
  roots = scan.zeros;
  for (std::size_t k = 0; k < scan.brackets.size(); ++k) {
    const auto [a, b] = scan.brackets[k];
    roots.push_back(bisect(g, a, b, scan.lo_values[k], 0.0));
  }
  sort_merge(roots);
  return roots;
}

Envelope::Envelope(Observations obs, std::shared_ptr<const ShapeFamily> family, Tolerances tol)
    : obs_(std::move(obs)), family_(std::move(family)), tol_(tol) {
  if (!family_) throw InvalidArgument("null shape family");
  const std::size_t n = obs_.size();
  roots_.resize(family_->size());
  for (std::size_t k = 0; k < family_->size(); ++k) {
    roots_[k].resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        roots_[k][pair_slot(i, j)] = pair_roots(family_->shape(k), obs_.site(i), obs_.value(i),
                                                obs_.site(j), obs_.value(j), tol_);
      }
    }
  }
}

std::size_t Envelope::pair_slot(std::size_t i, std::size_t j) const {
  if (i == j || i >= size() || j >= size()) throw InvalidArgument("invalid index pair");
  if (i > j) std::swap(i, j);
  return i * size() + j;
}

double Envelope::curve(std::size_t i, std::size_t k, double x) const {
  const double f = family_->value(k, obs_.site(i) - x);
  return f > 0.0 ? obs_.value(i) / f : kInf;
}

Interval Envelope::curve_support(std::size_t i, std::size_t k) const {
  const Interval sup = family_->shape(k).support();
  return {obs_.site(i) - sup.hi, obs_.site(i) - sup.lo};
}

const std::vector<double>& Envelope::roots(std::size_t k, std::size_t i, std::size_t j) const {
  return roots_.at(k)[pair_slot(i, j)];
}

EnvelopePoint envelope_value(const Envelope& env, std::size_t shape_id, double x, double rel_tol) {
  EnvelopePoint out;
  std::vector<double> v(env.size());
  for (std::size_t i = 0; i < env.size(); ++i) {
    v[i] = env.curve(i, shape_id, x);
    out.y = std::min(out.y, v[i]);
  }
  if (out.y == kInf) return out;
  for (std::size_t i = 0; i < env.size(); ++i) {
    if (v[i] <= out.y * (1.0 + rel_tol)) out.argmin.push_back(i);
  }
  return out;
}

double pair_point_weight(const CandidatePoint& point, std::size_t i, std::size_t j,
                         const Observations& obs, const ShapeFamily& family,
                         const Tolerances& tol) {
  const ShapeDescriptor& f = family.shape(point.shape_id);
  const double a = obs.value(i) * f.derivative(obs.site(j) - point.x0);
  const double b = obs.value(j) * f.derivative(obs.site(i) - point.x0);
  const double denom = std::abs(a - b);
  const double scale = std::abs(a) + std::abs(b);
  if (!(denom > tol.tangency_tol * scale) || denom == 0.0) {
    std::ostringstream os;
    os << "curves " << i << " and " << j << " are tangent at x = " << point.x0;
    throw TangencyError(os.str());
  }
  return family.prob(point.shape_id) / (point.y0 * point.y0 * denom);
}

std::vector<CandidatePoint> find_pair_intersections(const Envelope& env, std::size_t i,
                                                    std::size_t j) {
  if (i == j) throw InvalidArgument("pair intersection needs two distinct indices");
  if (i > j) std::swap(i, j);
  std::vector<CandidatePoint> out;
  std::vector<double> v(env.size());
  for (std::size_t k = 0; k < env.family().size(); ++k) {
    for (double x : env.roots(k, i, j)) {
      for (std::size_t m = 0; m < env.size(); ++m) v[m] = env.curve(m, k, x);
      const auto group = group_by_tolerance(v, 0.0, env.tolerances().strict_slack);
      if (group.size() != 2 || group[0] != i || group[1] != j) continue;
      CandidatePoint p{x, std::min(v[i], v[j]), k, 0.0};
      p.weight = pair_point_weight(p, i, j, env.obs(), env.family(), env.tolerances());
      out.push_back(p);
    }
  }
  return out;
}

SingletonWeight singleton_region_and_weight(const Envelope& env, std::size_t i) {
  SingletonWeight out;
  out.index = i;
  const double ti = env.obs().site(i);
  const double zi = env.obs().value(i);
  for (std::size_t k = 0; k < env.family().size(); ++k) {
    RegionIntegralResult res;
    res.shape_id = k;
    const Interval own = env.curve_support(i, k);
    std::vector<double> bps{own.lo, own.hi};
    for (std::size_t j = 0; j < env.size(); ++j) {
      if (j == i) continue;
      for (double x : env.roots(k, i, j)) {
        if (x > own.lo && x < own.hi) bps.push_back(x);
      }
      const Interval other = env.curve_support(j, k);
      for (double x : {other.lo, other.hi}) {
        if (x > own.lo && x < own.hi) bps.push_back(x);
      }
    }
    sort_merge(bps);
    for (std::size_t p = 0; p + 1 < bps.size(); ++p) {
      const double a = bps[p];
      const double b = bps[p + 1];
      const double mid = 0.5 * (a + b);
      const double vi = env.curve(i, k, mid);
      if (vi == kInf) continue;
      bool unique = true;
      for (std::size_t j = 0; j < env.size() && unique; ++j) {
        if (j != i && !(vi < env.curve(j, k, mid))) unique = false;
      }
      if (!unique) continue;
      if (!res.region.empty() && res.region.back().hi == a) {
        res.region.back().hi = b;
      } else {
        res.region.push_back({a, b});
      }
    }
    const ShapeDescriptor& f = env.family().shape(k);
    for (const Interval& iv : res.region) {
      const QuadratureResult q = f.integral(ti - iv.hi, ti - iv.lo, env.tolerances().quad_tol);
      res.integral += q.value;
      res.error += q.error;
    }
    out.weight += env.family().prob(k) * res.integral / (zi * zi);
    out.regions.push_back(std::move(res));
  }
  return out;
}

std::vector<std::size_t> group_by_tolerance(std::span<const double> curve_values, double epsilon,
                                            double slack) {
  if (epsilon < 0.0) throw InvalidArgument("tolerance must be nonnegative");
  std::vector<std::size_t> out;
  if (curve_values.empty()) return out;
  const double y = *std::min_element(curve_values.begin(), curve_values.end());
  if (y == kInf) return out;
  double threshold = y * (1.0 + slack);
  if (epsilon > 0.0) threshold = std::max(threshold, std::min(y + epsilon, y * (1.0 + epsilon)));
  for (std::size_t m = 0; m < curve_values.size(); ++m) {
    if (curve_values[m] < threshold || curve_values[m] == y) out.push_back(m);
  }
  return out;
}

std::vector<GroupHit> grouped_intersections(const Envelope& env, double epsilon) {
  const double slack = env.tolerances().strict_slack;
  std::vector<GroupHit> out;
  struct Multi {
    std::size_t i, j;
    GroupHit hit;
  };
  std::map<std::pair<std::size_t, std::vector<std::size_t>>, std::vector<Multi>> multi;
  std::vector<double> v(env.size());

  for (std::size_t k = 0; k < env.family().size(); ++k) {
    for (std::size_t i = 0; i < env.size(); ++i) {
      for (std::size_t j = i + 1; j < env.size(); ++j) {
        for (double x : env.roots(k, i, j)) {
          for (std::size_t m = 0; m < env.size(); ++m) v[m] = env.curve(m, k, x);
          auto group = group_by_tolerance(v, epsilon, slack);
          if (!std::binary_search(group.begin(), group.end(), i) ||
              !std::binary_search(group.begin(), group.end(), j)) {
            continue;
          }
          GroupHit hit;
          double y = kInf;
          for (std::size_t m : group) y = std::min(y, v[m]);
          hit.point = {x, y, k, 0.0};
          for (std::size_t m : group) {
            if (v[m] > y * (1.0 + slack)) hit.exact = false;
          }
          hit.point.weight =
              pair_point_weight(hit.point, group[0], group[1], env.obs(), env.family(),
                                env.tolerances());
          hit.members = std::move(group);
          if (hit.members.size() == 2) {
            out.push_back(std::move(hit));
          } else {
            multi[{k, hit.members}].push_back({i, j, std::move(hit)});
          }
        }
      }
    }
  }

  for (auto& [key, hits] : multi) {
    const auto& members = key.second;
    std::pair<std::size_t, std::size_t> chosen{members[0], members[1]};
    const bool has_lowest = std::any_of(hits.begin(), hits.end(), [&](const Multi& h) {
      return h.i == chosen.first && h.j == chosen.second;
    });
    if (!has_lowest) {
      chosen = {hits.front().i, hits.front().j};
      for (const Multi& h : hits) chosen = std::min(chosen, std::make_pair(h.i, h.j));
    }
    std::vector<double> kept_x;
    for (Multi& h : hits) {
      if (h.i != chosen.first || h.j != chosen.second) continue;
      const double x = h.hit.point.x0;
      if (std::any_of(kept_x.begin(), kept_x.end(),
                      [&](double y) { return std::abs(y - x) <= 1e-9 * (1.0 + std::abs(x)); })) {
        continue;
      }
      kept_x.push_back(x);
      out.push_back(std::move(h.hit));
    }
  }
  return out;
}

PiecewiseLinearSampler region_sampler(const ShapeDescriptor& f, double ti,
                                      const std::vector<Interval>& region, double cell) {
  PiecewiseLinearSampler sampler;
  for (const Interval& iv : region) {
    std::vector<double> xs{iv.lo, iv.hi};
    if (f.is_tabulated()) {
      for (double k : f.tabulated().knots()) {
        const double x = ti - k;
        if (x > iv.lo && x < iv.hi) xs.push_back(x);
      }
      sort_merge(xs);
    } else {
      const auto m = static_cast<std::size_t>(std::ceil(iv.length() / cell));
      xs.clear();
      for (std::size_t c = 0; c <= std::max<std::size_t>(m, 1); ++c) {
        xs.push_back(iv.lo + iv.length() * static_cast<double>(c) /
                                 static_cast<double>(std::max<std::size_t>(m, 1)));
      }
      xs.back() = iv.hi;
    }
    for (std::size_t c = 0; c + 1 < xs.size(); ++c) {
      sampler.add_cell(xs[c], xs[c + 1], f.value(ti - xs[c]), f.value(ti - xs[c + 1]));
    }
  }
  return sampler;
}

}  // namespace m3

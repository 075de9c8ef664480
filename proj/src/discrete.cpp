#include "m3/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace m3 {

void LatticeSpec::validate(double tolerance) const {
  if (!(pitch > 0.0)) throw InvalidArgument("lattice pitch must be positive");
  if (hi < lo) throw InvalidArgument("lattice window is empty");
  if (shapes.empty() || shapes.size() != probs.size()) {
    throw InvalidArgument("one probability per lattice shape required");
  }
  double ptotal = 0.0;
  double mass = 0.0;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    if (!(probs[k] > 0.0)) throw InvalidArgument("shape probabilities must be positive");
    ptotal += probs[k];
    double sum = 0.0;
    for (double v : shapes[k].values) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("lattice shape value invalid");
      sum += v;
    }
    mass += probs[k] * sum;
  }
  if (std::abs(ptotal - 1.0) > 1e-12) throw InvalidArgument("shape probabilities must sum to 1");
  if (std::abs(mass - 1.0) > tolerance) {
    std::ostringstream os;
    os << "expected lattice mass " << mass << " is not 1";
    throw NormalizationError(os.str());
  }
}

long LatticeSpec::index_of(double t) const {
  const double q = t / pitch;
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-9 * (1.0 + std::abs(q))) {
    throw OffLatticeError("site " + std::to_string(t) + " is not on the lattice");
  }
  return static_cast<long>(r);
}

namespace {

std::string hit_label(long m, std::size_t k) {
  return std::to_string(m) + ":" + std::to_string(k);
}

}  // namespace

DiscreteBlocks discrete_blocks(const LatticeSpec& spec, const Observations& obs, double rel_tol) {
  const std::size_t n = obs.size();
  std::vector<long> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = spec.index_of(obs.site(i));

  std::map<std::vector<std::size_t>, DiscreteBlock> by_members;
  std::vector<double> v(n);
  for (long m = spec.lo; m <= spec.hi; ++m) {
    for (std::size_t k = 0; k < spec.shapes.size(); ++k) {
      double y = kInf;
      for (std::size_t i = 0; i < n; ++i) {
        const double f = spec.shapes[k].at(idx[i] - m);
        v[i] = f > 0.0 ? obs.value(i) / f : kInf;
        y = std::min(y, v[i]);
      }
      if (y == kInf) continue;
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (v[i] <= y * (1.0 + rel_tol)) members.push_back(i);
      }
      DiscreteBlock& b = by_members[members];
      b.members = members;
      const double w = spec.probs[k] / y;
      b.hits.push_back({m, k, y, w});
      b.weight += w;
    }
  }

  DiscreteBlocks out;
  for (auto& [members, b] : by_members) out.blocks.push_back(std::move(b));

  std::vector<std::vector<std::size_t>> containing(n);
  for (std::size_t b = 0; b < out.blocks.size(); ++b) {
    for (std::size_t i : out.blocks[b].members) containing[i].push_back(b);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (containing[i].empty()) {
      throw InfeasibleError("observation " + std::to_string(i) +
                            " cannot be attained by any lattice atom");
    }
  }

  std::size_t best = n + 1;
  std::vector<bool> used(n, false);
  std::vector<std::size_t> chosen;
  std::function<void(std::size_t, double)> recurse = [&](std::size_t from, double weight) {
    while (from < n && used[from]) ++from;
    if (chosen.size() > best) return;
    if (from == n) {
      if (chosen.size() < best) {
        best = chosen.size();
        out.scenarios.clear();
      }
      DiscreteScenario s;
      s.blocks = chosen;
      std::sort(s.blocks.begin(), s.blocks.end());
      s.weight = weight;
      out.scenarios.push_back(std::move(s));
      return;
    }
    for (std::size_t b : containing[from]) {
      const auto& mem = out.blocks[b].members;
      if (std::any_of(mem.begin(), mem.end(), [&](std::size_t i) { return used[i]; })) continue;
      for (std::size_t i : mem) used[i] = true;
      chosen.push_back(b);
      recurse(from + 1, weight * out.blocks[b].weight);
      chosen.pop_back();
      for (std::size_t i : mem) used[i] = false;
    }
  };
  recurse(0, 1.0);
  if (out.scenarios.empty()) throw InfeasibleError("no partition into feasible lattice blocks");
  double total = 0.0;
  for (const auto& s : out.scenarios) total += s.weight;
  for (auto& s : out.scenarios) s.prob = s.weight / total;
  return out;
}

MaxLinearMatrix maxlinear_coefficients(const LatticeSpec& spec, std::span<const double> sites) {
  MaxLinearMatrix out;
  for (long m = spec.lo; m <= spec.hi; ++m) {
    for (std::size_t k = 0; k < spec.shapes.size(); ++k) out.columns.emplace_back(m, k);
  }
  for (double t : sites) {
    const long it = spec.index_of(t);
    std::vector<double> row;
    row.reserve(out.columns.size());
    for (const auto& [m, k] : out.columns) row.push_back(spec.shapes[k].at(it - m) * spec.probs[k]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

DiscreteDraw simulate_discrete(const LatticeSpec& spec, std::span<const double> sites, Rng& rng) {
  std::vector<long> idx;
  for (double t : sites) idx.push_back(spec.index_of(t));
  DiscreteDraw out;
  out.values.assign(sites.size(), 0.0);
  out.generator.assign(sites.size(), {0, 0});
  std::exponential_distribution<double> expo(1.0);
  for (long m = spec.lo; m <= spec.hi; ++m) {
    for (std::size_t k = 0; k < spec.shapes.size(); ++k) {
      const double level = spec.probs[k] / expo(rng);
      for (std::size_t s = 0; s < sites.size(); ++s) {
        const double v = level * spec.shapes[k].at(idx[s] - m);
        if (v > out.values[s]) {
          out.values[s] = v;
          out.generator[s] = {m, k};
        }
      }
    }
  }
  return out;
}

DiscreteSample rejection_oracle(const LatticeSpec& spec, const Observations& obs, double delta,
                                double t0, std::size_t n_accepted, Rng& rng,
                                std::size_t max_trials) {
  if (!(delta > 0.0)) throw InvalidArgument("box width must be positive");
  std::vector<double> sites(obs.sites().begin(), obs.sites().end());
  sites.push_back(t0);
  const std::size_t n = obs.size();
  DiscreteSample out;
  out.predictive.site = t0;
  while (out.predictive.draws.size() < n_accepted) {
    if (out.trials >= max_trials ||
        (out.trials >= 1000000 &&
         static_cast<double>(out.predictive.draws.size()) < 1e-6 * static_cast<double>(out.trials))) {
      throw AcceptanceTooLow("accepted " + std::to_string(out.predictive.draws.size()) + " of " +
                             std::to_string(out.trials) + " trials; try a wider box");
    }
    ++out.trials;
    const DiscreteDraw d = simulate_discrete(spec, sites, rng);
    bool accept = true;
    for (std::size_t i = 0; i < n && accept; ++i) {
      accept = d.values[i] > obs.value(i) && d.values[i] <= obs.value(i) * (1.0 + delta);
    }
    if (!accept) continue;
    out.predictive.draws.push_back(d.values[n]);
    std::string label;
    for (std::size_t s = 0; s <= n; ++s) {
      label += (s ? "|" : "") + hit_label(d.generator[s].first, d.generator[s].second);
    }
    out.labels.push_back(std::move(label));
  }
  return out;
}

DiscreteSample discrete_condition(const LatticeSpec& spec, const Observations& obs, double t0,
                                  std::size_t n_draws, Rng& rng) {
  if (n_draws == 0) throw InvalidCount("need at least one draw");
  const DiscreteBlocks blocks = discrete_blocks(spec, obs);
  const std::size_t n = obs.size();
  std::vector<long> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = spec.index_of(obs.site(i));
  const long i0 = spec.index_of(t0);

  std::vector<double> scenario_probs;
  for (const auto& s : blocks.scenarios) scenario_probs.push_back(s.prob);

  // Upper bound b(m, f) for free atoms and their reach at t0.
  struct Cell {
    long m;
    std::size_t k;
    double inv_bound;  // 1 / b, 0 when no observation constrains the cell
    double f0;
  };
  std::vector<Cell> cells;
  for (long m = spec.lo; m <= spec.hi; ++m) {
    for (std::size_t k = 0; k < spec.shapes.size(); ++k) {
      const double f0 = spec.shapes[k].at(i0 - m);
      if (!(f0 > 0.0)) continue;
      double inv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        inv = std::max(inv, spec.shapes[k].at(idx[i] - m) / obs.value(i));
      }
      cells.push_back({m, k, inv, f0});
    }
  }

  DiscreteSample out;
  out.predictive.site = t0;
  std::exponential_distribution<double> expo(1.0);
  for (std::size_t d = 0; d < n_draws; ++d) {
    const auto& sc = blocks.scenarios[sample_categorical(scenario_probs, rng)];
    std::vector<std::pair<long, std::size_t>> gen(n + 1);
    double best = 0.0;
    for (std::size_t b : sc.blocks) {
      const DiscreteBlock& B = blocks.blocks[b];
      std::vector<double> w;
      for (const auto& h : B.hits) w.push_back(h.weight);
      const LatticeHit& h = B.hits[sample_categorical(w, rng)];
      for (std::size_t i : B.members) gen[i] = {h.m, h.shape_id};
      const double v = h.y * spec.shapes[h.shape_id].at(i0 - h.m);
      if (v > best) {
        best = v;
        gen[n] = {h.m, h.shape_id};
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (idx[i] == i0 && std::abs(best - obs.value(i)) <= 1e-9 * obs.value(i)) {
        best = obs.value(i);
      }
    }
    for (const Cell& c : cells) {
      const double e = expo(rng);
      const double level = 1.0 / (c.inv_bound + e / spec.probs[c.k]);
      const double v = level * c.f0;
      if (v > best) {
        best = v;
        gen[n] = {c.m, c.k};
      }
    }
    out.predictive.draws.push_back(best);
    std::string label;
    for (std::size_t s = 0; s <= n; ++s) {
      label += (s ? "|" : "") + hit_label(gen[s].first, gen[s].second);
    }
    out.labels.push_back(std::move(label));
    ++out.trials;
  }
  return out;
}

}  // namespace m3

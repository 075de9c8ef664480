#include "m3/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace m3 {

namespace {

std::string members_str(const std::vector<std::size_t>& m) {
  std::ostringstream os;
  os << '{';
  for (std::size_t k = 0; k < m.size(); ++k) os << (k ? "," : "") << m[k];
  os << '}';
  return os.str();
}

bool overlaps(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::any_of(a.begin(), a.end(),
                     [&](std::size_t x) { return std::binary_search(b.begin(), b.end(), x); });
}

}  // namespace

void check_forced_conflicts(BlockSet& set) {
  std::vector<bool> drop(set.blocks.size(), false);
  for (std::size_t a = 0; a < set.blocks.size(); ++a) {
    const Block& A = set.blocks[a];
    if (!A.forced) continue;
    for (std::size_t b = 0; b < set.blocks.size(); ++b) {
      const Block& B = set.blocks[b];
      if (a == b || !B.forced || B.members.size() <= A.members.size()) continue;
      if (std::includes(B.members.begin(), B.members.end(), A.members.begin(),
                        A.members.end())) {
        drop[a] = true;
        set.diagnostics.push_back("forced block " + members_str(A.members) +
                                  " dominated by " + members_str(B.members));
        break;
      }
    }
  }
  std::vector<Block> kept;
  for (std::size_t a = 0; a < set.blocks.size(); ++a) {
    if (!drop[a]) kept.push_back(std::move(set.blocks[a]));
  }
  set.blocks = std::move(kept);
  for (std::size_t a = 0; a < set.blocks.size(); ++a) {
    for (std::size_t b = a + 1; b < set.blocks.size(); ++b) {
      const Block& A = set.blocks[a];
      const Block& B = set.blocks[b];
      if (A.forced && B.forced && overlaps(A.members, B.members)) {
        throw ConflictError("forced blocks " + members_str(A.members) + " and " +
                            members_str(B.members) + " overlap without a common superset");
      }
    }
  }
}

BlockSet enumerate_feasible_blocks(const Envelope& env, double epsilon) {
  BlockSet set;
  set.n = env.size();
  for (std::size_t i = 0; i < env.size(); ++i) {
    SingletonWeight sw = singleton_region_and_weight(env, i);
    if (!(sw.weight > 0.0)) {
      set.diagnostics.push_back("index " + std::to_string(i) + " has an empty singleton region");
      continue;
    }
    Block b;
    b.members = {i};
    b.regions = std::move(sw.regions);
    b.weight = sw.weight;
    set.blocks.push_back(std::move(b));
  }

  std::map<std::vector<std::size_t>, Block> multi;
  for (GroupHit& hit : grouped_intersections(env, epsilon)) {
    Block& b = multi[hit.members];
    b.members = hit.members;
    b.forced = hit.members.size() >= 3;
    b.exact = b.exact && hit.exact;
    b.weight += hit.point.weight;
    b.candidates.push_back(hit.point);
  }
  for (auto& [members, b] : multi) {
    if (b.weight > 0.0) set.blocks.push_back(std::move(b));
  }
  check_forced_conflicts(set);
  return set;
}

std::vector<Scenario> enumerate_scenarios(const BlockSet& set, std::size_t max_free) {
  const std::size_t n = set.n;
  std::vector<bool> forced(n, false);
  std::vector<std::size_t> forced_blocks;
  for (std::size_t b = 0; b < set.blocks.size(); ++b) {
    if (!set.blocks[b].forced) continue;
    forced_blocks.push_back(b);
    for (std::size_t m : set.blocks[b].members) forced[m] = true;
  }
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> singleton(n, npos);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs(n);
  for (std::size_t b = 0; b < set.blocks.size(); ++b) {
    const Block& B = set.blocks[b];
    if (B.forced || !(B.weight > 0.0)) continue;
    if (B.members.size() == 1 && !forced[B.members[0]]) singleton[B.members[0]] = b;
    if (B.members.size() == 2 && !forced[B.members[0]] && !forced[B.members[1]]) {
      pairs[B.members[0]].emplace_back(B.members[1], b);
    }
  }

  std::size_t n_free = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (forced[i]) continue;
    ++n_free;
    bool reachable = singleton[i] != npos || !pairs[i].empty();
    for (std::size_t j = 0; j < i && !reachable; ++j) {
      for (const auto& pr : pairs[j]) reachable = reachable || pr.first == i;
    }
    if (!reachable) {
      throw InfeasibleError("observation " + std::to_string(i) + " has no feasible block");
    }
  }
  if (n_free > max_free) {
    throw TooManyFreeIndices(std::to_string(n_free) + " free indices exceed the cap of " +
                             std::to_string(max_free));
  }

  std::vector<Scenario> out;
  std::vector<bool> used(forced);
  std::vector<std::size_t> chosen;
  std::function<void(std::size_t, double)> recurse = [&](std::size_t from, double weight) {
    while (from < n && used[from]) ++from;
    if (from == n) {
      Scenario s;
      s.blocks = forced_blocks;
      s.blocks.insert(s.blocks.end(), chosen.begin(), chosen.end());
      std::sort(s.blocks.begin(), s.blocks.end());
      s.weight = weight;
      out.push_back(std::move(s));
      return;
    }
    used[from] = true;
    if (singleton[from] != npos) {
      chosen.push_back(singleton[from]);
      recurse(from + 1, weight * set.blocks[singleton[from]].weight);
      chosen.pop_back();
    }
    for (const auto& [j, b] : pairs[from]) {
      if (used[j]) continue;
      used[j] = true;
      chosen.push_back(b);
      recurse(from + 1, weight * set.blocks[b].weight);
      chosen.pop_back();
      used[j] = false;
    }
    used[from] = false;
  };
  recurse(0, 1.0);
  if (out.empty()) throw InfeasibleError("no partition of the observations into feasible blocks");
  return out;
}

std::vector<Scenario> scenario_probabilities(std::vector<Scenario> scenarios) {
  if (scenarios.empty()) throw InfeasibleError("no scenario to normalize");
  double total = 0.0;
  for (const Scenario& s : scenarios) total += s.weight;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InfeasibleError("scenario weights do not have a positive finite sum");
  }
  for (Scenario& s : scenarios) s.prob = s.weight / total;
  return scenarios;
}

std::vector<double> candidate_probabilities(const Block& block, std::size_t a, std::size_t b,
                                            const Observations& obs, const ShapeFamily& family,
                                            const Tolerances& tol) {
  std::vector<double> w;
  double total = 0.0;
  for (const CandidatePoint& c : block.candidates) {
    w.push_back(pair_point_weight(c, a, b, obs, family, tol));
    total += w.back();
  }
  for (double& v : w) v /= total;
  return w;
}

void check_labelling_invariance(const Block& block, const Observations& obs,
                                const ShapeFamily& family, const Tolerances& tol) {
  const auto& m = block.members;
  if (m.size() < 3 || !block.exact || block.candidates.size() < 2) return;
  const std::size_t L = m.size();
  const auto ref = candidate_probabilities(block, m[0], m[1], obs, family, tol);
  for (const auto& [a, b] : {std::pair{m[L - 2], m[L - 1]}, std::pair{m[0], m[L - 1]}}) {
    const auto alt = candidate_probabilities(block, a, b, obs, family, tol);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      if (std::abs(ref[k] - alt[k]) > 1e-6 * std::max(ref[k], alt[k])) {
        throw LabellingError("candidate law of block " + members_str(m) +
                             " depends on the labelling");
      }
    }
  }
}

ScenarioTable::ScenarioTable(std::shared_ptr<const Envelope> env, double epsilon)
    : env_(std::move(env)), epsilon_(epsilon) {
  if (!env_) throw InvalidArgument("null envelope");
  const Envelope& e = *env_;
  blocks_ = enumerate_feasible_blocks(e, epsilon);
  if (e.tolerances().check_labelling) {
    for (const Block& b : blocks_.blocks) {
      check_labelling_invariance(b, e.obs(), e.family(), e.tolerances());
    }
  }
  scenarios_ = scenario_probabilities(enumerate_scenarios(blocks_, e.tolerances().max_free));
  for (const Scenario& s : scenarios_) probs_.push_back(s.prob);

  singleton_tables_.resize(blocks_.blocks.size());
  for (std::size_t b = 0; b < blocks_.blocks.size(); ++b) {
    const Block& B = blocks_.blocks[b];
    if (B.members.size() != 1) continue;
    const double ti = e.obs().site(B.members[0]);
    SingletonTables& t = singleton_tables_[b];
    for (const RegionIntegralResult& r : B.regions) {
      if (!(r.integral > 0.0)) continue;
      PiecewiseLinearSampler sampler = region_sampler(e.family().shape(r.shape_id), ti, r.region,
                                                      e.tolerances().sampler_cell);
      if (sampler.empty()) continue;
      t.shapes.push_back(r.shape_id);
      t.shape_weights.push_back(e.family().prob(r.shape_id) * r.integral);
      t.samplers.push_back(std::move(sampler));
    }
  }
}

std::size_t ScenarioTable::sample_scenario(Rng& rng) const {
  return sample_categorical(probs_, rng);
}

std::vector<Atom> ScenarioTable::sample_generators(std::size_t scenario, Rng& rng) const {
  const Envelope& e = *env_;
  std::vector<Atom> atoms;
  for (std::size_t b : scenarios_.at(scenario).blocks) {
    const Block& B = blocks_.blocks[b];
    if (B.members.size() == 1) {
      const SingletonTables& t = singleton_tables_[b];
      if (t.samplers.empty()) {
        throw EmptyRegionError("singleton block " + members_str(B.members) + " has no mass");
      }
      const std::size_t pick = sample_categorical(t.shape_weights, rng);
      const std::size_t i = B.members[0];
      const std::size_t k = t.shapes[pick];
      double s = t.samplers[pick].sample(rng);
      double f = e.family().value(k, e.obs().site(i) - s);
      if (!(f > 0.0)) throw EmptyRegionError("sampled location outside the shape support");
      atoms.push_back({s, e.obs().value(i) / f, k});
    } else {
      std::vector<double> w;
      for (const CandidatePoint& c : B.candidates) w.push_back(c.weight);
      const CandidatePoint& c = B.candidates[sample_categorical(w, rng)];
      atoms.push_back({c.x0, c.y0, c.shape_id});
    }
  }
  return atoms;
}

}  // namespace m3

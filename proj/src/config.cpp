#include "m3/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace m3 {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void allow_only(const json& obj, const std::string& path, const std::set<std::string>& keys) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (!keys.count(k)) throw ConfigError(join(path, k), "unknown key");
  }
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

double positive(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) throw ConfigError(path, "must be positive");
  return x;
}

std::size_t count(const json& v, const std::string& path, std::size_t min = 1) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto x = v.get<long long>();
  if (x < static_cast<long long>(min)) {
    throw ConfigError(path, "must be at least " + std::to_string(min));
  }
  return static_cast<std::size_t>(x);
}

std::vector<double> numbers(const json& v, const std::string& path, bool allow_empty = false) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  if (v.empty() && !allow_empty) throw ConfigError(path, "must not be empty");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.push_back(number(v[k], path + "[" + std::to_string(k) + "]"));
  }
  return out;
}

GridSpec grid(const json& v, const std::string& path, GridSpec def) {
  allow_only(v, path, {"lo", "hi", "step"});
  if (v.contains("lo")) def.lo = number(v["lo"], join(path, "lo"));
  if (v.contains("hi")) def.hi = number(v["hi"], join(path, "hi"));
  if (v.contains("step")) def.step = positive(v["step"], join(path, "step"));
  if (def.lo > 0.0 || def.hi < 0.0) throw ConfigError(path, "grid must contain 0");
  return def;
}

LatticeSpec lattice(const json& v, const std::string& path) {
  allow_only(v, path, {"pitch", "lo", "hi", "shapes", "probs"});
  LatticeSpec spec;
  if (v.contains("pitch")) spec.pitch = positive(v["pitch"], join(path, "pitch"));
  for (const char* key : {"lo", "hi"}) {
    if (!v.contains(key) || !v[key].is_number_integer()) {
      throw ConfigError(join(path, key), "expected an integer");
    }
  }
  spec.lo = v["lo"].get<long>();
  spec.hi = v["hi"].get<long>();
  if (!v.contains("shapes") || !v["shapes"].is_array() || v["shapes"].empty()) {
    throw ConfigError(join(path, "shapes"), "expected a nonempty array");
  }
  for (std::size_t k = 0; k < v["shapes"].size(); ++k) {
    const std::string sp = join(path, "shapes") + "[" + std::to_string(k) + "]";
    const json& s = v["shapes"][k];
    allow_only(s, sp, {"offset", "values"});
    LatticeShape shape;
    if (s.contains("offset")) {
      if (!s["offset"].is_number_integer()) throw ConfigError(join(sp, "offset"), "expected an integer");
      shape.offset = s["offset"].get<long>();
    }
    if (!s.contains("values")) throw ConfigError(join(sp, "values"), "required");
    shape.values = numbers(s["values"], join(sp, "values"));
    spec.shapes.push_back(std::move(shape));
  }
  if (v.contains("probs")) {
    spec.probs = numbers(v["probs"], join(path, "probs"));
  } else {
    spec.probs.assign(spec.shapes.size(), 1.0 / static_cast<double>(spec.shapes.size()));
  }
  try {
    spec.validate(1e-6);
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return spec;
}

Tolerances tolerances(const json& v, const std::string& path) {
  allow_only(v, path,
             {"root_tol", "quad_tol", "tangency_tol", "strict_slack", "scan_points",
              "max_scan_points", "max_free", "sampler_cell", "check_labelling"});
  Tolerances t;
  if (v.contains("root_tol")) t.root_tol = positive(v["root_tol"], join(path, "root_tol"));
  if (v.contains("quad_tol")) t.quad_tol = positive(v["quad_tol"], join(path, "quad_tol"));
  if (v.contains("tangency_tol")) {
    t.tangency_tol = positive(v["tangency_tol"], join(path, "tangency_tol"));
  }
  if (v.contains("strict_slack")) {
    t.strict_slack = positive(v["strict_slack"], join(path, "strict_slack"));
  }
  if (v.contains("scan_points")) t.scan_points = count(v["scan_points"], join(path, "scan_points"), 2);
  if (v.contains("max_scan_points")) {
    t.max_scan_points = count(v["max_scan_points"], join(path, "max_scan_points"), 2);
  }
  if (v.contains("max_free")) t.max_free = count(v["max_free"], join(path, "max_free"));
  if (v.contains("sampler_cell")) {
    t.sampler_cell = positive(v["sampler_cell"], join(path, "sampler_cell"));
  }
  if (v.contains("check_labelling")) {
    if (!v["check_labelling"].is_boolean()) {
      throw ConfigError(join(path, "check_labelling"), "expected a boolean");
    }
    t.check_labelling = v["check_labelling"].get<bool>();
  }
  return t;
}

MethodSpec method(const json& v, const std::string& path, double default_epsilon) {
  MethodSpec m;
  m.epsilon = default_epsilon;
  if (v.is_string()) {
    m.method = v.get<std::string>();
  } else {
    allow_only(v, path, {"method", "label", "epsilon"});
    if (!v.contains("method") || !v["method"].is_string()) {
      throw ConfigError(join(path, "method"), "expected a string");
    }
    m.method = v["method"].get<std::string>();
    if (v.contains("label")) {
      if (!v["label"].is_string()) throw ConfigError(join(path, "label"), "expected a string");
      m.label = v["label"].get<std::string>();
    }
    if (v.contains("epsilon")) {
      m.epsilon = number(v["epsilon"], join(path, "epsilon"));
      if (m.epsilon < 0.0) throw ConfigError(join(path, "epsilon"), "must be nonnegative");
    }
  }
  if (m.method != "ppp" && m.method != "gt") {
    throw ConfigError(v.is_string() ? path : join(path, "method"),
                      "unknown method '" + m.method + "' (expected ppp or gt)");
  }
  if (m.label.empty()) m.label = m.method;
  return m;
}

}  // namespace

RunConfig parse_config(const json& j) {
  allow_only(j, "",
             {"model", "seed", "threads", "sites", "values", "t0", "eval_sites", "replicates",
              "draws", "methods", "epsilon", "smith", "brown_resnick", "lattice", "gt",
              "tolerances", "floor_factor", "path_grid", "path_draws"});
  RunConfig rc;
  StudyConfig& sc = rc.study;
  ModelConfig& mc = sc.model;

  if (j.contains("model")) {
    if (!j["model"].is_string()) throw ConfigError("model", "expected a string");
    mc.model = j["model"].get<std::string>();
    if (mc.model != "smith" && mc.model != "brown_resnick" && mc.model != "discrete") {
      throw ConfigError("model", "expected smith, brown_resnick or discrete");
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
    sc.seed = j["seed"].get<std::uint64_t>();
    rc.has_seed = true;
  }
  if (j.contains("threads")) sc.threads = count(j["threads"], "threads");
  if (j.contains("sites")) sc.sites = numbers(j["sites"], "sites");
  if (j.contains("values")) {
    rc.values = numbers(j["values"], "values");
    for (std::size_t k = 0; k < rc.values.size(); ++k) {
      if (!(rc.values[k] > 0.0)) {
        throw ConfigError("values[" + std::to_string(k) + "]", "must be positive");
      }
    }
  }
  if (j.contains("t0")) sc.t0 = number(j["t0"], "t0");
  if (j.contains("eval_sites")) rc.eval_sites = numbers(j["eval_sites"], "eval_sites");
  if (j.contains("replicates")) sc.replicates = count(j["replicates"], "replicates");
  if (j.contains("draws")) sc.draws = count(j["draws"], "draws");
  if (j.contains("epsilon")) {
    rc.epsilon = number(j["epsilon"], "epsilon");
    if (rc.epsilon < 0.0) throw ConfigError("epsilon", "must be nonnegative");
  }
  if (j.contains("floor_factor")) sc.floor_factor = positive(j["floor_factor"], "floor_factor");
  if (j.contains("methods")) {
    const json& ms = j["methods"];
    if (!ms.is_array() || ms.empty()) throw ConfigError("methods", "expected a nonempty array");
    for (std::size_t k = 0; k < ms.size(); ++k) {
      sc.methods.push_back(method(ms[k], "methods[" + std::to_string(k) + "]", rc.epsilon));
    }
  } else {
    sc.methods.push_back(method(json("ppp"), "methods", rc.epsilon));
  }
  if (j.contains("smith")) {
    allow_only(j["smith"], "smith", {"support_radius"});
    if (j["smith"].contains("support_radius")) {
      mc.smith_radius = positive(j["smith"]["support_radius"], "smith.support_radius");
    }
  }
  if (j.contains("brown_resnick")) {
    const json& br = j["brown_resnick"];
    allow_only(br, "brown_resnick", {"truth_grid", "family_grid", "free_grid", "n_shapes"});
    if (br.contains("truth_grid")) mc.truth_grid = grid(br["truth_grid"], "brown_resnick.truth_grid", mc.truth_grid);
    if (br.contains("family_grid")) mc.family_grid = grid(br["family_grid"], "brown_resnick.family_grid", mc.family_grid);
    if (br.contains("free_grid")) mc.free_grid = grid(br["free_grid"], "brown_resnick.free_grid", mc.free_grid);
    if (br.contains("n_shapes")) mc.n_shapes = count(br["n_shapes"], "brown_resnick.n_shapes");
  }
  if (j.contains("lattice")) mc.lattice = lattice(j["lattice"], "lattice");
  if (mc.model == "discrete" && !j.contains("lattice")) {
    throw ConfigError("lattice", "required for the discrete model");
  }
  if (j.contains("gt")) {
    const json& g = j["gt"];
    allow_only(g, "gt", {"fit_samples", "fit_sites", "nu_grid", "c_grid"});
    if (g.contains("fit_samples")) sc.gt.fit_samples = count(g["fit_samples"], "gt.fit_samples", 2);
    if (g.contains("fit_sites")) sc.gt.fit_sites = numbers(g["fit_sites"], "gt.fit_sites");
    if (g.contains("nu_grid")) sc.gt.nu_grid = numbers(g["nu_grid"], "gt.nu_grid");
    if (g.contains("c_grid")) sc.gt.c_grid = numbers(g["c_grid"], "gt.c_grid");
  }
  if (j.contains("tolerances")) sc.tol = tolerances(j["tolerances"], "tolerances");
  sc.tol.epsilon = rc.epsilon;
  if (j.contains("path_grid")) {
    GridSpec g;
    const json& pg = j["path_grid"];
    allow_only(pg, "path_grid", {"lo", "hi", "step"});
    for (const char* key : {"lo", "hi", "step"}) {
      if (!pg.contains(key)) throw ConfigError(join("path_grid", key), "required");
    }
    g.lo = number(pg["lo"], "path_grid.lo");
    g.hi = number(pg["hi"], "path_grid.hi");
    g.step = positive(pg["step"], "path_grid.step");
    if (!(g.hi > g.lo)) throw ConfigError("path_grid", "hi must exceed lo");
    rc.path_grid = g;
  }
  if (j.contains("path_draws")) rc.path_draws = count(j["path_draws"], "path_draws");
  if (!rc.values.empty() && rc.values.size() != sc.sites.size()) {
    throw ConfigError("values", "must have one entry per site");
  }
  return rc;
}

RunConfig load_config(const std::string& path, json* raw) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  RunConfig rc = parse_config(j);
  if (raw != nullptr) *raw = std::move(j);
  return rc;
}

std::uint64_t config_hash(const json& j) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

json grid_json(const GridSpec& g) { return {{"lo", g.lo}, {"hi", g.hi}, {"step", g.step}}; }

}  // namespace

json config_to_json(const RunConfig& rc) {
  const StudyConfig& sc = rc.study;
  json j;
  j["model"] = sc.model.model;
  j["seed"] = sc.seed;
  j["threads"] = sc.threads;
  j["sites"] = sc.sites;
  if (!rc.values.empty()) j["values"] = rc.values;
  j["t0"] = sc.t0;
  if (!rc.eval_sites.empty()) j["eval_sites"] = rc.eval_sites;
  j["replicates"] = sc.replicates;
  j["draws"] = sc.draws;
  j["epsilon"] = rc.epsilon;
  j["floor_factor"] = sc.floor_factor;
  json methods = json::array();
  for (const MethodSpec& m : sc.methods) {
    methods.push_back({{"method", m.method}, {"label", m.label}, {"epsilon", m.epsilon}});
  }
  j["methods"] = methods;
  j["smith"] = {{"support_radius", sc.model.smith_radius}};
  j["brown_resnick"] = {{"truth_grid", grid_json(sc.model.truth_grid)},
                        {"family_grid", grid_json(sc.model.family_grid)},
                        {"free_grid", grid_json(sc.model.free_grid)},
                        {"n_shapes", sc.model.n_shapes}};
  if (sc.model.model == "discrete") {
    json shapes = json::array();
    for (const LatticeShape& s : sc.model.lattice.shapes) {
      shapes.push_back({{"offset", s.offset}, {"values", s.values}});
    }
    j["lattice"] = {{"pitch", sc.model.lattice.pitch},
                    {"lo", sc.model.lattice.lo},
                    {"hi", sc.model.lattice.hi},
                    {"shapes", shapes},
                    {"probs", sc.model.lattice.probs}};
  }
  j["gt"] = {{"fit_samples", sc.gt.fit_samples},
             {"nu_grid", sc.gt.nu_grid},
             {"c_grid", sc.gt.c_grid}};
  if (!sc.gt.fit_sites.empty()) j["gt"]["fit_sites"] = sc.gt.fit_sites;
  j["tolerances"] = {{"root_tol", sc.tol.root_tol},
                     {"quad_tol", sc.tol.quad_tol},
                     {"tangency_tol", sc.tol.tangency_tol},
                     {"strict_slack", sc.tol.strict_slack},
                     {"scan_points", sc.tol.scan_points},
                     {"max_scan_points", sc.tol.max_scan_points},
                     {"max_free", sc.tol.max_free},
                     {"sampler_cell", sc.tol.sampler_cell},
                     {"check_labelling", sc.tol.check_labelling}};
  if (rc.path_grid) {
    j["path_grid"] = grid_json(*rc.path_grid);
    j["path_draws"] = rc.path_draws;
  }
  return j;
}

json report_to_json(const StudyReport& report) {
  json j;
  json methods = json::array();
  for (const MethodResult& m : report.methods) {
    json e = json::object();
    for (const auto& [name, n] : m.errors) e[name] = n;
    methods.push_back({{"label", m.label},
                       {"crps_k", m.scores.count ? json(m.scores.crps) : json(nullptr)},
                       {"mae_k", m.scores.count ? json(m.scores.mae) : json(nullptr)},
                       {"successes", m.scores.count},
                       {"failures", m.failures},
                       {"errors", e}});
  }
  j["methods"] = methods;
  j["replicates"] = report.log_truth.size();
  if (report.has_gt_fit) {
    j["gt_fit"] = {{"nu", report.gt_fit.nu},
                   {"c", report.gt_fit.c},
                   {"log_likelihood", report.gt_fit.log_likelihood}};
  }
  return j;
}

json scenarios_to_json(const ScenarioTable& table) {
  const BlockSet& set = table.blocks();
  const Observations& obs = table.envelope().obs();
  json blocks = json::array();
  for (const Block& b : set.blocks) {
    json jb;
    jb["members"] = b.members;
    jb["weight"] = b.weight;
    jb["forced"] = b.forced;
    jb["exact"] = b.exact;
    json cands = json::array();
    for (const CandidatePoint& c : b.candidates) {
      cands.push_back({{"x0", c.x0}, {"y0", c.y0}, {"shape", c.shape_id}, {"weight", c.weight}});
    }
    if (!cands.empty()) jb["candidates"] = cands;
    blocks.push_back(jb);
  }
  json scenarios = json::array();
  for (const Scenario& s : table.scenarios()) {
    json members = json::array();
    for (std::size_t b : s.blocks) members.push_back(set.blocks[b].members);
    scenarios.push_back({{"blocks", members}, {"weight", s.weight}, {"probability", s.prob}});
  }
  json j;
  j["sites"] = std::vector<double>(obs.sites().begin(), obs.sites().end());
  j["values"] = std::vector<double>(obs.values().begin(), obs.values().end());
  j["epsilon"] = table.epsilon();
  j["blocks"] = blocks;
  j["scenarios"] = scenarios;
  j["diagnostics"] = set.diagnostics;
  return j;
}

json diagnostics_to_json(const FamilyDiagnostics& d) {
  return {{"expected_integral", d.expected_integral},
          {"tolerance", d.tolerance},
          {"sup_bound", d.sup_bound},
          {"max_value", d.max_tabulated_value},
          {"support_radius", d.support_radius},
          {"max_value_at_radius", d.max_value_at_radius},
          {"normalization_ok", d.normalization_ok},
          {"sup_ok", d.sup_ok},
          {"support_ok", d.support_ok},
          {"ok", d.ok()},
          {"messages", d.messages}};
}

std::string report_table_csv(const StudyReport& report) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "method,CRPS_K,MAE_K,successes,failures\n";
  for (const MethodResult& m : report.methods) {
    os << m.label << ',';
    if (m.scores.count) {
      os << m.scores.crps << ',' << m.scores.mae;
    } else {
      os << "NA,NA";
    }
    os << ',' << m.scores.count << ',' << m.failures << '\n';
  }
  return os.str();
}

std::string report_scores_csv(const StudyReport& report) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "replicate,method,log_truth,crps,abs_error,error\n";
  for (std::size_t r = 0; r < report.log_truth.size(); ++r) {
    for (const MethodResult& m : report.methods) {
      os << r << ',' << m.label << ',' << report.log_truth[r] << ',';
      if (m.error_names[r].empty()) {
        os << m.crps[r] << ',' << m.abs_error[r] << ',';
      } else {
        os << "NA,NA," << m.error_names[r];
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace m3

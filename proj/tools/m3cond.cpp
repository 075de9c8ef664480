// m3cond: simulate, condition, study and validate mixed moving maxima models
// from a JSON config.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "m3/conditional.hpp"
#include "m3/config.hpp"
#include "m3/discrete.hpp"
#include "m3/study.hpp"
#include "m3/uncond_sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Run {
  fs::path out_dir;
  std::vector<std::string> outputs;

  void write(const std::string& name, const std::string& content) {
    std::ofstream os(out_dir / name, std::ios::binary);
    os << content;
    if (!os) throw std::runtime_error("cannot write " + (out_dir / name).string());
    outputs.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
};

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

std::vector<double> sites_or_throw(const std::vector<double>& sites, const char* key) {
  if (sites.empty()) throw m3::ConfigError(key, "required and nonempty");
  return sites;
}

m3::Observations observations(const m3::RunConfig& rc) {
  if (rc.study.sites.empty()) throw m3::ConfigError("sites", "required and nonempty");
  if (rc.values.empty()) throw m3::ConfigError("values", "required for condition");
  return m3::canonicalize_observations(rc.study.sites, rc.values);
}

void cmd_simulate(const m3::RunConfig& rc, Run& run) {
  const m3::ModelConfig& model = rc.study.model;
  const std::vector<double> sites =
      sites_or_throw(rc.eval_sites.empty() ? rc.study.sites : rc.eval_sites, "eval_sites");
  std::ostringstream os;
  os << "draw,site,value\n";
  for (std::size_t d = 0; d < rc.study.draws; ++d) {
    m3::Rng rng = m3::make_rng(rc.study.seed, d, 0);
    const std::vector<double> z = m3::simulate_truth(model, sites, rng);
    for (std::size_t k = 0; k < sites.size(); ++k) {
      os << d << ',' << fmt(sites[k]) << ',' << fmt(z[k]) << '\n';
    }
  }
  run.write("field.csv", os.str());
}

json discrete_to_json(const m3::DiscreteBlocks& blocks) {
  json jb = json::array();
  for (const auto& b : blocks.blocks) {
    json hits = json::array();
    for (const auto& h : b.hits) {
      hits.push_back({{"m", h.m}, {"shape", h.shape_id}, {"y", h.y}, {"weight", h.weight}});
    }
    jb.push_back({{"members", b.members}, {"weight", b.weight}, {"hits", hits}});
  }
  json js = json::array();
  for (const auto& s : blocks.scenarios) {
    json members = json::array();
    for (std::size_t b : s.blocks) members.push_back(blocks.blocks[b].members);
    js.push_back({{"blocks", members}, {"weight", s.weight}, {"probability", s.prob}});
  }
  return {{"blocks", jb}, {"scenarios", js}};
}

void cmd_condition(const m3::RunConfig& rc, Run& run) {
  const m3::StudyConfig& sc = rc.study;
  const m3::ModelConfig& model = sc.model;
  const m3::Observations obs = observations(rc);
  m3::Rng rng = m3::make_rng(sc.seed, 0, 0);

  std::ostringstream pred;
  pred << "draw,site,value\n";

  if (model.model == "discrete") {
    const m3::DiscreteSample s = m3::discrete_condition(model.lattice, obs, sc.t0, sc.draws, rng);
    for (std::size_t d = 0; d < s.predictive.draws.size(); ++d) {
      pred << d << ',' << fmt(sc.t0) << ',' << fmt(s.predictive.draws[d]) << '\n';
    }
    run.write("predictive.csv", pred.str());
    json j = discrete_to_json(m3::discrete_blocks(model.lattice, obs));
    j["sites"] = std::vector<double>(obs.sites().begin(), obs.sites().end());
    j["values"] = std::vector<double>(obs.values().begin(), obs.values().end());
    run.write_json("scenarios.json", j);
    return;
  }

  m3::ConditionalOptions opt;
  opt.epsilon = rc.epsilon;
  opt.floor_factor = sc.floor_factor;
  opt.tol = sc.tol;
  std::unique_ptr<m3::ConditionalSampler> sampler;
  if (model.model == "smith") {
    sampler = std::make_unique<m3::ConditionalSampler>(
        obs, std::make_shared<const m3::ShapeFamily>(m3::build_smith_family(model.smith_radius)),
        opt);
  } else {
    const m3::BrShapeConfig grid = model.family_grid.to_config();
    const m3::ShapeSampler shapes = [&](m3::Rng& r) { return m3::sample_br_shape(grid, r); };
    sampler = std::make_unique<m3::ConditionalSampler>(m3::make_hybrid_sampler(
        obs, shapes, model.n_shapes, m3::ShapeLaw(model.free_grid.to_config()), rng, opt));
  }

  const m3::EmpiricalPredictive p = m3::predictive_distribution(*sampler, sc.t0, sc.draws, rng);
  for (std::size_t d = 0; d < p.draws.size(); ++d) {
    pred << d << ',' << fmt(sc.t0) << ',' << fmt(p.draws[d]) << '\n';
  }
  run.write("predictive.csv", pred.str());
  run.write_json("scenarios.json", m3::scenarios_to_json(sampler->table()));

  if (rc.path_grid) {
    std::vector<double> grid;
    const auto steps =
        static_cast<long>(std::floor((rc.path_grid->hi - rc.path_grid->lo) / rc.path_grid->step + 1e-9));
    for (long k = 0; k <= steps; ++k) {
      grid.push_back(rc.path_grid->lo + rc.path_grid->step * static_cast<double>(k));
    }
    std::ostringstream paths;
    paths << "draw,site,value\n";
    for (std::size_t d = 0; d < rc.path_draws; ++d) {
      const std::vector<double> z = sampler->draw(grid, rng);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        paths << d << ',' << fmt(grid[k]) << ',' << fmt(z[k]) << '\n';
      }
    }
    run.write("paths.csv", paths.str());
  }
}

void cmd_study(const m3::RunConfig& rc, Run& run, json& timings) {
  if (!rc.has_seed) throw m3::ConfigError("seed", "required for study runs");
  sites_or_throw(rc.study.sites, "sites");
  const m3::StudyReport report = m3::run_study(rc.study);
  run.write_json("report.json", m3::report_to_json(report));
  run.write("table.csv", m3::report_table_csv(report));
  run.write("scores.csv", m3::report_scores_csv(report));
  for (const auto& m : report.methods) timings["method_seconds"][m.label] = m.seconds;
}

void cmd_validate(const m3::RunConfig& rc, Run& run) {
  const m3::ModelConfig& model = rc.study.model;
  json j;
  j["model"] = model.model;
  if (model.model == "smith") {
    const m3::ShapeFamily fam = m3::build_smith_family(model.smith_radius);
    j["family"] = m3::diagnostics_to_json(fam.diagnostics());
  } else if (model.model == "brown_resnick") {
    m3::Rng rng = m3::make_rng(rc.study.seed, 0, 0);
    const m3::BrShapeConfig grid = model.family_grid.to_config();
    const m3::ShapeFamily fam = m3::build_empirical_family(
        model.n_shapes, [&](m3::Rng& r) { return m3::sample_br_shape(grid, r); }, rng);
    j["family"] = m3::diagnostics_to_json(fam.diagnostics());
    j["n_shapes"] = model.n_shapes;
  } else {
    double mass = 0.0;
    for (std::size_t k = 0; k < model.lattice.shapes.size(); ++k) {
      double s = 0.0;
      for (double v : model.lattice.shapes[k].values) s += v;
      mass += model.lattice.probs[k] * s;
    }
    model.lattice.validate(1e-6);
    j["family"] = {{"expected_sum", mass}, {"ok", true}};
  }
  run.write_json("diagnostics.json", j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional simulation of mixed moving maxima processes"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir = ".";
  std::size_t threads = 0;
  bool echo = false;
  for (const char* name : {"simulate", "condition", "study", "validate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "JSON config file")->required();
    sub->add_option("-o,--out", out_dir, "output directory");
    sub->add_option("-t,--threads", threads, "worker threads (overrides config)");
    sub->add_flag("--echo", echo, "print the resolved config with defaults filled in");
  }
  app.get_subcommand("simulate")->description("unconditional field values -> field.csv");
  app.get_subcommand("condition")
      ->description("predictive.csv, scenarios.json and paths.csv if path_grid is set");
  app.get_subcommand("study")->description("replicated comparison -> report.json, table.csv");
  app.get_subcommand("validate")->description("shape family diagnostics -> diagnostics.json");
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();

  m3::RunConfig rc;
  json raw;
  try {
    rc = m3::load_config(config_path, &raw);
    if (threads > 0) rc.study.threads = threads;
    if (echo) std::cout << m3::config_to_json(rc).dump(2) << '\n';
  } catch (const m3::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const json manifest{{"command", command},
                        {"version", kVersion},
                        {"seed", nullptr},
                        {"config_hash", nullptr},
                        {"config", nullptr},
                        {"error", {{"name", "ConfigError"}, {"key", e.key()}, {"message", e.what()}}},
                        {"timings", json::object()},
                        {"outputs", json::array()}};
    std::ofstream(fs::path(out_dir) / "manifest.json") << manifest.dump(2) << '\n';
    return 2;
  }

  Run run;
  run.out_dir = out_dir;
  std::error_code ec;
  fs::create_directories(run.out_dir, ec);

  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = rc.study.seed;
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << m3::config_hash(raw);
  manifest["config_hash"] = hash.str();
  manifest["config"] = m3::config_to_json(rc);
  manifest["error"] = nullptr;
  json timings = json::object();

  int code = 0;
  try {
    if (command == "simulate") cmd_simulate(rc, run);
    if (command == "condition") cmd_condition(rc, run);
    if (command == "study") cmd_study(rc, run, timings);
    if (command == "validate") cmd_validate(rc, run);
  } catch (const m3::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    manifest["error"] = {{"name", "ConfigError"}, {"key", e.key()}, {"message", e.what()}};
    code = 2;
  } catch (const m3::Error& e) {
    std::cerr << e.name() << ": " << e.what() << '\n';
    manifest["error"] = {{"name", e.name()}, {"message", e.what()}};
    code = 1;
  }
  timings["total_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest["timings"] = timings;
  manifest["outputs"] = run.outputs;
  std::ofstream(run.out_dir / "manifest.json") << manifest.dump(2) << '\n';
  if (code == 0) {
    std::cout << command << ": wrote";
    for (const auto& o : run.outputs) std::cout << ' ' << (run.out_dir / o).string();
    std::cout << '\n';
  }
  return code;
}

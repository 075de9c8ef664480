#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "m3/config.hpp"

using namespace m3;
using nlohmann::json;

namespace {

std::string key_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST(Config, MinimalConfigFillsDefaults) {
  const RunConfig rc = parse_config(json::parse(R"({"sites": [-1, 1], "values": [1, 1]})"));
  EXPECT_EQ(rc.study.model.model, "smith");
  EXPECT_EQ(rc.epsilon, 1e-6);
  EXPECT_EQ(rc.study.tol.epsilon, 1e-6);
  ASSERT_EQ(rc.study.methods.size(), 1u);
  EXPECT_EQ(rc.study.methods[0].method, "ppp");
  EXPECT_EQ(rc.study.methods[0].epsilon, 1e-6);
  EXPECT_EQ(rc.study.replicates, 1000u);
  EXPECT_EQ(rc.study.draws, 100u);
  EXPECT_FALSE(rc.has_seed);
  EXPECT_FALSE(rc.path_grid.has_value());
}

TEST(Config, MethodsAsStringsAndObjects) {
  const RunConfig rc = parse_config(json::parse(R"({
    "model": "brown_resnick", "seed": 4, "epsilon": 1e-5,
    "methods": ["ppp", {"method": "ppp", "label": "PPP2", "epsilon": 0.01}, "gt"],
    "brown_resnick": {"n_shapes": 50, "family_grid": {"step": 0.2}}
  })"));
  ASSERT_EQ(rc.study.methods.size(), 3u);
  EXPECT_EQ(rc.study.methods[0].epsilon, 1e-5);
  EXPECT_EQ(rc.study.methods[1].label, "PPP2");
  EXPECT_EQ(rc.study.methods[1].epsilon, 0.01);
  EXPECT_EQ(rc.study.methods[2].label, "gt");
  EXPECT_EQ(rc.study.model.n_shapes, 50u);
  EXPECT_EQ(rc.study.model.family_grid.step, 0.2);
  EXPECT_EQ(rc.study.model.family_grid.lo, -5.0);
  EXPECT_TRUE(rc.has_seed);
}

TEST(Config, ErrorsNameTheKeyPath) {
  EXPECT_EQ(key_of(json::parse(R"({"replicates": -5})")), "replicates");
  EXPECT_EQ(key_of(json::parse(R"({"bogus": 1})")), "bogus");
  EXPECT_EQ(key_of(json::parse(R"({"methods": ["ppp", {"method": "ppp", "epsilon": -1}]})")),
            "methods[1].epsilon");
  EXPECT_EQ(key_of(json::parse(R"({"methods": ["mlm"]})")), "methods[0]");
  EXPECT_EQ(key_of(json::parse(R"({"brown_resnick": {"truth_grid": {"stp": 1}}})")),
            "brown_resnick.truth_grid.stp");
  EXPECT_EQ(key_of(json::parse(R"({"values": [1, 0]})")), "values[1]");
  EXPECT_EQ(key_of(json::parse(R"({"sites": [0, 1], "values": [1]})")), "values");
  EXPECT_EQ(key_of(json::parse(R"({"model": "discrete"})")), "lattice");
  EXPECT_EQ(key_of(json::parse(R"({"tolerances": {"max_free": 0}})")), "tolerances.max_free");
  EXPECT_EQ(key_of(json::parse(R"({"seed": -3})")), "seed");
  EXPECT_EQ(key_of(json::parse(R"([1, 2])")), "");
}

TEST(Config, LatticeValidation) {
  const json ok = json::parse(R"({"model": "discrete", "lattice": {"lo": -2, "hi": 2,
      "shapes": [{"offset": 0, "values": [0.6, 0.4]}]}})");
  const RunConfig rc = parse_config(ok);
  EXPECT_EQ(rc.study.model.lattice.probs, (std::vector<double>{1.0}));
  json bad = ok;
  bad["lattice"]["shapes"][0]["values"] = {0.6, 0.6};
  EXPECT_EQ(key_of(bad), "lattice");
}

TEST(Config, LoadReportsMissingFileAndSyntaxErrors) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
  const std::string path = ::testing::TempDir() + "bad_config.json";
  std::ofstream(path) << "{\n  \"seed\": 1,\n  \"sites\": [1, 2,\n}\n";
  try {
    load_config(path);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  std::remove(path.c_str());
}

TEST(Config, EchoRoundTripsAndHashIsStable) {
  const json j = json::parse(R"({"seed": 3, "sites": [-1, 1], "values": [1, 2],
      "path_grid": {"lo": -2, "hi": 2, "step": 0.5}, "methods": ["ppp", "gt"]})");
  const RunConfig rc = parse_config(j);
  const json echo = config_to_json(rc);
  const RunConfig again = parse_config(echo);
  EXPECT_EQ(config_to_json(again), echo);
  EXPECT_EQ(config_hash(j), config_hash(json::parse(j.dump())));
  json k = j;
  k["seed"] = 4;
  EXPECT_NE(config_hash(j), config_hash(k));
}

TEST(Config, ScenarioTableJson) {
  auto env = std::make_shared<const Envelope>(
      canonicalize_observations(std::vector<double>{-1.0, 1.0}, std::vector<double>{1.0, 1.0}),
      std::make_shared<const ShapeFamily>(build_smith_family()));
  const ScenarioTable table(env, 1e-6);
  const json j = scenarios_to_json(table);
  ASSERT_EQ(j["scenarios"].size(), 2u);
  EXPECT_NEAR(j["scenarios"][0]["probability"].get<double>(), 0.854, 5e-4);
  EXPECT_NEAR(j["scenarios"][1]["probability"].get<double>(), 0.146, 5e-4);
  EXPECT_EQ(j["blocks"][2]["candidates"].size(), 1u);
}

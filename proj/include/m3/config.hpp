#pragma once

// JSON run configuration, validation with key paths, and JSON views of
// reports, scenario tables and diagnostics.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "m3/scenario.hpp"
#include "m3/shapes.hpp"
#include "m3/study.hpp"

namespace m3 {

/// Schema violation; `key()` is the offending key path, e.g. "methods[1].epsilon".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  [[nodiscard]] const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  StudyConfig study;                // model, sites, t0, replicates, draws, methods, seed, ...
  std::vector<double> values;       // conditioning values (condition)
  std::vector<double> eval_sites;   // evaluation sites (simulate, condition)
  std::optional<GridSpec> path_grid;
  std::size_t path_draws = 10;
  double epsilon = 1e-6;
  bool has_seed = false;
};

/// Validates every key; unknown keys and wrong types raise ConfigError.
RunConfig parse_config(const nlohmann::json& j);
/// Reads and parses a file; parse errors carry line and column.
RunConfig load_config(const std::string& path, nlohmann::json* raw = nullptr);

/// FNV-1a hash of the canonical serialization.
std::uint64_t config_hash(const nlohmann::json& j);

nlohmann::json config_to_json(const RunConfig& config);
nlohmann::json report_to_json(const StudyReport& report);
nlohmann::json scenarios_to_json(const ScenarioTable& table);
nlohmann::json diagnostics_to_json(const FamilyDiagnostics& d);

/// Table with one row per method: label, CRPS_K, MAE_K, successes, failures.
std::string report_table_csv(const StudyReport& report);
/// One row per replicate and method.
std::string report_scores_csv(const StudyReport& report);

}  // namespace m3

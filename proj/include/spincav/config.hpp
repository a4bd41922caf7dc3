#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "spincav/oracle_integrator.hpp"
#include "spincav/relaxation_analysis.hpp"
#include "spincav/spectra_engine.hpp"

namespace spincav {

enum class Scenario { GroundState, ExcitedState, Custom };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// Either {start, stop, points} or {values: [...]}.
struct GridSpec {
  std::vector<double> values;
};

struct RecoveryConfig {
  RecoveryModel model;
  double noise = 0.05;
  ProbeSchedule schedule;
  ExtractSettings extract;
  FitSettings fit;
  std::string trace_csv;  // fit this trace instead of simulating
};

struct OracleCheckConfig {
  int instances = 20;
  int spin_nodes = 5;
  int optical_nodes = 3;
  double rho_tol = 1e-6;
  double beta_tol = 1e-5;
  OracleConfig oracle;
};

struct RunConfig {
  Scenario scenario = Scenario::GroundState;
  std::string preset;
  ModelParams model;
  GridSpec drive_hz;
  GridSpec field_t;
  GridSpec laser_hz;
  bool alternate = false;
  std::string raman_axis = "field";  // slow axis of the Raman map: field or laser
  RecoveryConfig recovery;
  OracleCheckConfig oracle_check;
  std::string output_dir = "spincav_out";
  double db_offset = 0.0;
  std::uint64_t seed = 1;
  int threads = 1;
  double max_failure_fraction = 0.0;

  nlohmann::json resolved;  // the complete config actually used
};

struct PresetInfo {
  std::string name;
  std::string description;
};

const std::vector<PresetInfo>& preset_catalog();

// Complete config document for a named preset. Throws ConfigError.
nlohmann::json preset_json(const std::string& name);

// Merges `user` over its preset (or the scenario default) and validates the
// result. Unknown keys, wrong types and invalid values throw ConfigError.
RunConfig load_config(const nlohmann::json& user);
RunConfig load_config_text(const std::string& text);
RunConfig load_preset(const std::string& name);

// Rejects any key of `doc` that does not appear in `shape`. Arrays and the
// grid objects are compared as leaves.
void check_keys(const nlohmann::json& doc, const nlohmann::json& shape, const std::string& path = "");

nlohmann::json model_to_json(const ModelParams& p);
ModelParams model_from_json(const nlohmann::json& j);

std::vector<double> grid_values(const nlohmann::json& j, const std::string& path);

}  // namespace spincav

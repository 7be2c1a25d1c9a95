#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mrhydro/controllers.hpp"
#include "mrhydro/params.hpp"
#include "mrhydro/synthesis.hpp"

namespace mrhydro {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario knobs that can be overridden from a config file.
struct ScenarioSettings {
  double sim_dt = 1e-4;
  bool noise = false;
  double backdrive_amplitude = 0.0;  // m, 0 selects the calibrated constant
  double step_torque = 12.0;         // N m
  double offset_torque = 10.0;       // N m
  double amplitude_torque = 2.0;     // N m
  int dwell_cycles = 10;
  std::vector<double> frf_frequencies;  // Hz, empty selects the default grid
};

// What a command runs: controller and scenario names as on the command line.
struct Selection {
  std::string controller = "lqgi";
  std::string scenario = "step";
  double frequency = 1.0;       // Hz, dwell and backdrive
  double command_torque = 0.0;  // N m, backdrive
  std::vector<std::string> only;  // report rows, empty selects all five
};

struct RunConfig {
  PlantParams plant;
  ControllerSettings controllers;
  ScenarioSettings scenario;
  Selection selection;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
};

// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

Json to_json(const PlantParams& p);
Json to_json(const ControllerSettings& s);
Json to_json(const ScenarioSettings& s);
Json to_json(const Selection& s);
Json to_json(const RunConfig& c);
Json to_json(const GainSet& g);

// Strict readers: every key must already exist in the default document.
RunConfig run_config_from_json(const Json& j);
GainSet gain_set_from_json(const Json& j);

// Defaults, then `patch` merged on top. Unknown keys throw ConfigError with
// the offending key path.
RunConfig apply_config_patch(const RunConfig& base, const Json& patch);
RunConfig load_config_file(const std::string& path, const RunConfig& base = {});

std::string plant_hash(const PlantParams& p);
std::string config_hash(const RunConfig& c);

}  // namespace mrhydro

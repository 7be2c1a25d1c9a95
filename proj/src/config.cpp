#include "mrhydro/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mrhydro/sim.hpp"

namespace mrhydro {

namespace {

Json to_json(const DitherConfig& d) {
  return {{"frequency", d.frequency},
          {"amplitude_slope", d.amplitude_slope},
          {"amplitude_floor", d.amplitude_floor},
          {"enabled", d.enabled}};
}

Json to_json(const FrictionParams& f) {
  return {{"mu", f.mu}, {"steepness", f.steepness}, {"mode", std::string(to_string(f.mode))}};
}

Json to_json(const PidConfig& c) {
  return {{"kp", c.kp},
          {"ki", c.ki},
          {"kd", c.kd},
          {"derivative_filter_hz", c.derivative_filter_hz},
          {"feedthrough", c.feedthrough},
          {"output_min", c.output_min},
          {"output_max", c.output_max}};
}

Json to_json(const CostWeights& w) {
  return {{"rho", w.rho}, {"rho_i", w.rho_i}, {"pressure_unit", w.pressure_unit}};
}

Json to_json(const NoiseCovariances& n) {
  return {{"R_L", std::vector<double>(n.R_L.data(), n.R_L.data() + n.R_L.size())},
          {"rho_L", n.rho_L},
          {"D", std::vector<double>(n.D.data(), n.D.data() + n.D.size())}};
}

void read(const Json& j, DitherConfig& d) {
  j.at("frequency").get_to(d.frequency);
  j.at("amplitude_slope").get_to(d.amplitude_slope);
  j.at("amplitude_floor").get_to(d.amplitude_floor);
  j.at("enabled").get_to(d.enabled);
}

void read(const Json& j, FrictionParams& f) {
  j.at("mu").get_to(f.mu);
  j.at("steepness").get_to(f.steepness);
  f.mode = friction_mode_from_string(j.at("mode").get<std::string>());
}

void read(const Json& j, PidConfig& c) {
  j.at("kp").get_to(c.kp);
  j.at("ki").get_to(c.ki);
  j.at("kd").get_to(c.kd);
  j.at("derivative_filter_hz").get_to(c.derivative_filter_hz);
  j.at("feedthrough").get_to(c.feedthrough);
  j.at("output_min").get_to(c.output_min);
  j.at("output_max").get_to(c.output_max);
}

void read(const Json& j, CostWeights& w) {
  j.at("rho").get_to(w.rho);
  j.at("rho_i").get_to(w.rho_i);
  j.at("pressure_unit").get_to(w.pressure_unit);
}

template <int N>
void read_vector(const Json& j, Eigen::Matrix<double, N, 1>& v, const char* name) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != static_cast<std::size_t>(N)) {
    throw ConfigError(std::string(name) + ": expected " + std::to_string(N) + " values");
  }
  for (int i = 0; i < N; ++i) v[i] = values[i];
}

void read(const Json& j, NoiseCovariances& n) {
  read_vector(j.at("R_L"), n.R_L, "R_L");
  j.at("rho_L").get_to(n.rho_L);
  read_vector(j.at("D"), n.D, "D");
}

void read(const Json& j, PlantParams& p) {
  const Json& t = j.at("transmission");
  auto& tr = p.transmission;
  t.at("m1").get_to(tr.m1);
  t.at("m2").get_to(tr.m2);
  t.at("m3").get_to(tr.m3);
  t.at("k1").get_to(tr.k1);
  t.at("k2").get_to(tr.k2);
  t.at("k3").get_to(tr.k3);
  t.at("b1").get_to(tr.b1);
  t.at("b2").get_to(tr.b2);
  t.at("b3").get_to(tr.b3);
  const Json& c = j.at("clutch");
  auto& cl = p.clutch;
  c.at("poly_c3").get_to(cl.poly_c3);
  c.at("poly_c2").get_to(cl.poly_c2);
  c.at("poly_c1").get_to(cl.poly_c1);
  c.at("poly_c0").get_to(cl.poly_c0);
  c.at("tau_delay").get_to(cl.tau_delay);
  c.at("omega_c").get_to(cl.omega_c);
  c.at("torque_max").get_to(cl.torque_max);
  c.at("current_max").get_to(cl.current_max);
  read(j.at("friction"), p.friction);
  const Json& g = j.at("geometry");
  auto& ge = p.geometry;
  g.at("area_master").get_to(ge.area_master);
  g.at("area_slave").get_to(ge.area_slave);
  g.at("r_pulley").get_to(ge.r_pulley);
  g.at("screw_lead").get_to(ge.screw_lead);
  g.at("ratio_R").get_to(ge.ratio_R);
  g.at("p_dc").get_to(ge.p_dc);
}

void read(const Json& j, ControllerSettings& s) {
  j.at("dt").get_to(s.dt);
  read(j.at("dither"), s.dither);
  read(j.at("compensation"), s.compensation);
  j.at("speed_filter_hz").get_to(s.speed_filter_hz);
  read(j.at("pid_master"), s.pid_master);
  read(j.at("pid_slave"), s.pid_slave);
  read(j.at("weights"), s.weights);
  read(j.at("noise"), s.noise);
}

void read(const Json& j, ScenarioSettings& s) {
  j.at("sim_dt").get_to(s.sim_dt);
  j.at("noise").get_to(s.noise);
  j.at("backdrive_amplitude").get_to(s.backdrive_amplitude);
  j.at("step_torque").get_to(s.step_torque);
  j.at("offset_torque").get_to(s.offset_torque);
  j.at("amplitude_torque").get_to(s.amplitude_torque);
  j.at("dwell_cycles").get_to(s.dwell_cycles);
  j.at("frf_frequencies").get_to(s.frf_frequencies);
}

void read(const Json& j, Selection& s) {
  j.at("controller").get_to(s.controller);
  j.at("scenario").get_to(s.scenario);
  j.at("frequency").get_to(s.frequency);
  j.at("command_torque").get_to(s.command_torque);
  j.at("only").get_to(s.only);
  (void)controller_kind_from_string(s.controller);
  (void)scenario_kind_from_string(s.scenario);
  for (const std::string& name : s.only) (void)controller_kind_from_string(name);
  if (!(s.frequency > 0.0)) throw std::invalid_argument("selection.frequency must be > 0");
}

// Every key in `patch` must exist in `reference` with a compatible type.
void check_keys(const Json& patch, const Json& reference, const std::string& path) {
  if (!patch.is_object()) throw ConfigError("config: " + path + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) throw ConfigError("config: unknown key '" + here + "'");
    const Json& ref = reference.at(key);
    if (ref.is_object()) {
      check_keys(value, ref, here);
    } else if (ref.is_number() != value.is_number() || ref.is_boolean() != value.is_boolean() ||
               ref.is_string() != value.is_string() || ref.is_array() != value.is_array()) {
      throw ConfigError("config: wrong type for '" + here + "'");
    }
  }
}

}  // namespace

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json to_json(const PlantParams& p) {
  const auto& t = p.transmission;
  const auto& c = p.clutch;
  const auto& g = p.geometry;
  return {{"transmission",
           {{"m1", t.m1}, {"m2", t.m2}, {"m3", t.m3}, {"k1", t.k1}, {"k2", t.k2},
            {"k3", t.k3}, {"b1", t.b1}, {"b2", t.b2}, {"b3", t.b3}}},
          {"clutch",
           {{"poly_c3", c.poly_c3}, {"poly_c2", c.poly_c2}, {"poly_c1", c.poly_c1},
            {"poly_c0", c.poly_c0}, {"tau_delay", c.tau_delay}, {"omega_c", c.omega_c},
            {"torque_max", c.torque_max}, {"current_max", c.current_max}}},
          {"friction", to_json(p.friction)},
          {"geometry",
           {{"area_master", g.area_master}, {"area_slave", g.area_slave},
            {"r_pulley", g.r_pulley}, {"screw_lead", g.screw_lead}, {"ratio_R", g.ratio_R},
            {"p_dc", g.p_dc}}}};
}

Json to_json(const ControllerSettings& s) {
  return {{"dt", s.dt},
          {"dither", to_json(s.dither)},
          {"compensation", to_json(s.compensation)},
          {"speed_filter_hz", s.speed_filter_hz},
          {"pid_master", to_json(s.pid_master)},
          {"pid_slave", to_json(s.pid_slave)},
          {"weights", to_json(s.weights)},
          {"noise", to_json(s.noise)}};
}

Json to_json(const ScenarioSettings& s) {
  return {{"sim_dt", s.sim_dt},
          {"noise", s.noise},
          {"backdrive_amplitude", s.backdrive_amplitude},
          {"step_torque", s.step_torque},
          {"offset_torque", s.offset_torque},
          {"amplitude_torque", s.amplitude_torque},
          {"dwell_cycles", s.dwell_cycles},
          {"frf_frequencies", s.frf_frequencies}};
}

Json to_json(const Selection& s) {
  return {{"controller", s.controller},
          {"scenario", s.scenario},
          {"frequency", s.frequency},
          {"command_torque", s.command_torque},
          {"only", s.only}};
}

Json to_json(const RunConfig& c) {
  return {{"plant", to_json(c.plant)},
          {"controllers", to_json(c.controllers)},
          {"scenario", to_json(c.scenario)},
          {"selection", to_json(c.selection)},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

Json to_json(const GainSet& g) {
  Json j;
  j["K"] = std::vector<double>(g.K.data(), g.K.data() + g.K.size());
  j["K_ff"] = g.K_ff;
  Json rows = Json::array();
  for (int r = 0; r < g.L.rows(); ++r) {
    std::vector<double> row(g.L.cols());
    for (int c = 0; c < g.L.cols(); ++c) row[c] = g.L(r, c);
    rows.push_back(row);
  }
  j["L"] = rows;
  j["weights"] = to_json(g.weights);
  j["noise"] = to_json(g.noise);
  j["plant_hash"] = g.plant_hash;
  j["certificates"] = {{"regulator_residual", g.regulator_residual},
                       {"filter_residual", g.filter_residual},
                       {"regulator_max_real", g.regulator_max_real},
                       {"estimator_max_real", g.estimator_max_real},
                       {"closed_loop_max_real", g.closed_loop_max_real}};
  return j;
}

GainSet gain_set_from_json(const Json& j) {
  try {
    GainSet g;
    const auto K = j.at("K").get<std::vector<double>>();
    if (K.size() != kNumAugmented) throw ConfigError("gains: K must have 8 entries");
    for (int i = 0; i < kNumAugmented; ++i) g.K(i) = K[i];
    j.at("K_ff").get_to(g.K_ff);
    const auto L = j.at("L").get<std::vector<std::vector<double>>>();
    if (L.size() != kNumStates) throw ConfigError("gains: L must have 7 rows");
    for (int r = 0; r < kNumStates; ++r) {
      if (L[r].size() != kNumMeasurements) throw ConfigError("gains: L rows must have 4 entries");
      for (int c = 0; c < kNumMeasurements; ++c) g.L(r, c) = L[r][c];
    }
    read(j.at("weights"), g.weights);
    read(j.at("noise"), g.noise);
    j.at("plant_hash").get_to(g.plant_hash);
    const Json& cert = j.at("certificates");
    cert.at("regulator_residual").get_to(g.regulator_residual);
    cert.at("filter_residual").get_to(g.filter_residual);
    cert.at("regulator_max_real").get_to(g.regulator_max_real);
    cert.at("estimator_max_real").get_to(g.estimator_max_real);
    cert.at("closed_loop_max_real").get_to(g.closed_loop_max_real);
    return g;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("gains: ") + e.what());
  }
}

RunConfig run_config_from_json(const Json& j) { return apply_config_patch(RunConfig{}, j); }

RunConfig apply_config_patch(const RunConfig& base, const Json& patch) {
  Json merged = to_json(base);
  check_keys(patch, merged, "");
  merged.merge_patch(patch);
  RunConfig out;
  try {
    read(merged.at("plant"), out.plant);
    read(merged.at("controllers"), out.controllers);
    read(merged.at("scenario"), out.scenario);
    read(merged.at("selection"), out.selection);
    merged.at("seed").get_to(out.seed);
    merged.at("output_dir").get_to(out.output_dir);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(out.scenario.sim_dt > 0.0)) throw ConfigError("config: scenario.sim_dt must be > 0");
  if (out.scenario.dwell_cycles < 10) throw ConfigError("config: scenario.dwell_cycles must be >= 10");
  out.plant.validate();
  out.controllers.weights.validate();
  out.controllers.noise.validate();
  return out;
}

RunConfig load_config_file(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  Json patch;
  try {
    patch = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: parse error in '" + path + "': " + e.what());
  }
  return apply_config_patch(base, patch);
}

std::string plant_hash(const PlantParams& p) { return fnv1a_hex(to_json(p).dump()); }

std::string config_hash(const RunConfig& c) {
  // Where outputs go does not change what is computed.
  Json j = to_json(c);
  j.erase("output_dir");
  return fnv1a_hex(j.dump());
}

}  // namespace mrhydro

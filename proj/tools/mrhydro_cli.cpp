// mrhydro: synthesis, simulation and comparison report from the command line.
//
// Configuration is layered: built-in defaults, then --config FILE, then flags.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"
#include "mrhydro/analysis.hpp"
#include "mrhydro/batch.hpp"
#include "mrhydro/config.hpp"
#include "mrhydro/report.hpp"
#include "mrhydro/synthesis.hpp"
#include "mrhydro/trace_io.hpp"

namespace {

using namespace mrhydro;

struct Flags {
  std::string config_file;
  std::string controller;
  std::string scenario;
  double frequency = 0.0;
  double command_torque = 0.0;
  bool command_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output_dir;
  std::string only;
  std::vector<double> frequencies;
  std::string gains_file;
  bool serial = false;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Defaults, then the config file, then the flags; each layer is logged.
RunConfig resolve_config(const Flags& f) {
  RunConfig cfg;
  std::cerr << "config: built-in defaults\n";
  if (!f.config_file.empty()) {
    cfg = load_config_file(f.config_file, cfg);
    std::cerr << "config: file " << f.config_file << "\n";
  }
  Json patch = Json::object();
  Json sel = Json::object();
  if (!f.controller.empty()) sel["controller"] = f.controller;
  if (!f.scenario.empty()) sel["scenario"] = f.scenario;
  if (f.frequency > 0.0) sel["frequency"] = f.frequency;
  if (f.command_set) sel["command_torque"] = f.command_torque;
  if (!f.only.empty()) sel["only"] = split_csv(f.only);
  if (!sel.empty()) patch["selection"] = sel;
  if (f.seed_set) patch["seed"] = f.seed;
  if (!f.output_dir.empty()) patch["output_dir"] = f.output_dir;
  if (!f.frequencies.empty()) patch["scenario"] = {{"frf_frequencies", f.frequencies}};
  if (!patch.empty()) {
    cfg = apply_config_patch(cfg, patch);
    std::cerr << "config: flags " << patch.dump() << "\n";
  }
  std::cerr << "config: hash " << config_hash(cfg) << " seed " << cfg.seed << "\n";
  return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

// The effective configuration; feeding it back with --config reproduces the run.
void write_effective_config(const RunConfig& cfg) {
  write_text_file(out_path(cfg, "config.json"), to_json(cfg).dump(2) + "\n");
}

OutputStamp stamp_for(const RunConfig& cfg, const std::string& what) {
  return {config_hash(cfg), cfg.seed, what};
}

Experiment make_experiment(const RunConfig& cfg, const std::string& gains_file = {}) {
  Experiment exp;
  exp.plant = cfg.plant;
  exp.settings = cfg.controllers;
  if (!gains_file.empty()) {
    std::ifstream in(gains_file);
    if (!in) throw ConfigError("gains: cannot open '" + gains_file + "'");
    exp.gains = gain_set_from_json(Json::parse(in));
    if (exp.gains.plant_hash != plant_hash(exp.plant)) {
      throw ConfigError("gains: plant hash mismatch; re-run synth for this plant");
    }
  } else {
    exp.gains = synthesize(exp.plant, exp.settings.weights, exp.settings.noise);
  }
  return exp;
}

double backdrive_amplitude(const RunConfig& cfg) {
  return cfg.scenario.backdrive_amplitude > 0.0 ? cfg.scenario.backdrive_amplitude
                                                : kCalibratedBackdriveAmplitude;
}

Scenario scenario_for(const RunConfig& cfg) {
  const ControllerKind ctrl = controller_kind_from_string(cfg.selection.controller);
  const double f = cfg.selection.frequency;
  Scenario sc;
  switch (scenario_kind_from_string(cfg.selection.scenario)) {
    case ScenarioKind::kStep:
      sc = Scenario::make_step(ctrl);
      sc.reference.step_torque = cfg.scenario.step_torque;
      break;
    case ScenarioKind::kChirp:
      sc = Scenario::make_chirp(ctrl);
      sc.reference.offset_torque = cfg.scenario.offset_torque;
      sc.reference.amplitude_torque = cfg.scenario.amplitude_torque;
      break;
    case ScenarioKind::kSineDwell:
      sc = Scenario::make_sine_dwell(ctrl, f, cfg.scenario.dwell_cycles);
      sc.reference.offset_torque = cfg.scenario.offset_torque;
      sc.reference.amplitude_torque = cfg.scenario.amplitude_torque;
      break;
    case ScenarioKind::kBackdrive:
      sc = Scenario::make_backdrive(ctrl, f, cfg.selection.command_torque);
      sc.backdrive.amplitude = backdrive_amplitude(cfg);
      break;
    case ScenarioKind::kFrictionId:
      sc = Scenario::make_friction_id();
      sc.controller = ctrl;
      break;
  }
  sc.noise = cfg.scenario.noise;
  sc.seed = cfg.seed;
  if (cfg.scenario.sim_dt != sc.sim_dt) {
    sc.sim_dt = cfg.scenario.sim_dt;
    sc.duration = std::ceil(sc.duration / sc.sim_dt - 1e-9) * sc.sim_dt;
  }
  return sc;
}

MatrixOptions matrix_options(const RunConfig& cfg, bool serial) {
  MatrixOptions mo;
  if (!cfg.scenario.frf_frequencies.empty()) mo.frf_grid = cfg.scenario.frf_frequencies;
  mo.dwell.offset_torque = cfg.scenario.offset_torque;
  mo.dwell.amplitude_torque = cfg.scenario.amplitude_torque;
  mo.dwell.cycles = cfg.scenario.dwell_cycles;
  mo.dwell.sim_dt = cfg.scenario.sim_dt;
  mo.dwell.noise = cfg.scenario.noise;
  mo.dwell.seed = cfg.seed;
  mo.step_torque = cfg.scenario.step_torque;
  mo.backdrive_amplitude = backdrive_amplitude(cfg);
  mo.sim_dt = cfg.scenario.sim_dt;
  mo.noise = cfg.scenario.noise;
  mo.seed = cfg.seed;
  mo.parallel = !serial;
  return mo;
}

std::string eigen_line(const std::string& name, const Eigen::MatrixXd& A) {
  const Eigen::VectorXcd ev = A.eigenvalues();
  std::ostringstream os;
  os.precision(6);
  os << name << ":";
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    os << " " << ev[i].real() << (ev[i].imag() < 0 ? "-" : "+") << std::abs(ev[i].imag()) << "j";
  }
  return os.str();
}

int cmd_synth(const Flags& f) {
  const RunConfig cfg = resolve_config(f);
  const Experiment exp = make_experiment(cfg);
  const GainSet& g = exp.gains;
  const StateSpace ss = build_state_space(exp.plant);
  const OutputStamp stamp = stamp_for(cfg, "synth");

  Json gains = to_json(g);
  gains["config_hash"] = stamp.config_hash;
  gains["seed"] = stamp.seed;
  write_text_file(out_path(cfg, "gains.json"), gains.dump(2) + "\n");

  const AugmentedSystem aug = augment_with_integral(ss, g.weights);
  const ClosedLoop cl = lqgi_closed_loop(ss, g);
  const double hold_delay = exp.plant.clutch.tau_delay + 0.5 * exp.settings.dt;
  const LoopMargins m0 = lqgi_input_margins(exp.plant, g, 0.0);
  const LoopMargins md = lqgi_input_margins(exp.plant, g, hold_delay);
  std::ostringstream log;
  log.precision(6);
  log << stamp_line(stamp);
  log << "weights rho=" << g.weights.rho << " rho_i=" << g.weights.rho_i
      << " pressure_unit=" << g.weights.pressure_unit << "\n";
  log << "K_i=" << g.K_i() << " |K_x|=" << g.K_x().norm() << " |K|=" << g.K.norm()
      << " K_ff=" << g.K_ff << "\n";
  log << "regulator CARE residual " << g.regulator_residual << "\n";
  log << "filter CARE residual " << g.filter_residual << "\n";
  log << "max real: regulator " << g.regulator_max_real << " estimator "
      << g.estimator_max_real << " closed loop " << g.closed_loop_max_real << "\n";
  log << eigen_line("regulator eig", aug.A - aug.B * g.K) << "\n";
  log << eigen_line("estimator eig", ss.A - g.L * ss.C) << "\n";
  log << eigen_line("closed loop eig", cl.A) << "\n";
  log << "input margins, no delay: GM " << m0.gain_margin_db << " dB at " << m0.gain_crossover_hz
      << " Hz, PM " << m0.phase_margin_deg << " deg at " << m0.phase_crossover_hz << " Hz\n";
  log << "input margins, delay " << hold_delay * 1e3 << " ms: GM " << md.gain_margin_db
      << " dB at " << md.gain_crossover_hz << " Hz, PM " << md.phase_margin_deg << " deg at "
      << md.phase_crossover_hz << " Hz\n";
  write_text_file(out_path(cfg, "synth_log.txt"), log.str());
  write_effective_config(cfg);
  std::cout << log.str();
  const bool hurwitz = g.closed_loop_max_real < 0.0;
  if (!hurwitz) std::cerr << "synth: closed loop is not Hurwitz\n";
  return hurwitz ? 0 : 1;
}

int cmd_run(const Flags& f) {
  const RunConfig cfg = resolve_config(f);
  const Experiment exp = make_experiment(cfg, f.gains_file);
  const Scenario sc = scenario_for(cfg);
  auto controller = exp.factory()(sc);
  const SimTrace trace = run_scenario(sc, exp.plant, *controller);
  const std::string what = std::string(to_string(sc.kind)) + " " + cfg.selection.controller;
  const std::string name =
      std::string(to_string(sc.kind)) + "_" + cfg.selection.controller + ".csv";
  write_text_file(out_path(cfg, name), trace_to_csv(trace, stamp_for(cfg, what)));
  write_effective_config(cfg);
  std::cout << stamp_line(stamp_for(cfg, what));
  std::cout << "trace " << out_path(cfg, name) << " (" << trace.size() << " samples)\n";
  if (trace.aborted) {
    std::cerr << "run: aborted: " << trace.diagnostic << "\n";
    return 1;
  }
  switch (sc.kind) {
    case ScenarioKind::kStep: {
      const StepMetrics m = step_metrics(trace, sc.reference.step_time);
      std::printf("bandwidth %.2f Hz, rise 63%% %.2f ms, overshoot %.1f %%, final %.3f N m%s\n",
                  m.bandwidth_hz, m.rise_time_63_ms, m.overshoot_pct, m.final_value,
                  m.reliable ? "" : " (not settled)");
      break;
    }
    case ScenarioKind::kSineDwell: {
      const FrfPoint p = dwell_point(trace, sc, exp.plant.geometry);
      std::printf("%.3g Hz: %.2f dB, %.1f deg%s\n", p.frequency, p.magnitude_db, p.phase_deg,
                  p.flagged ? " (flagged: poor sinusoid fit)" : "");
      break;
    }
    case ScenarioKind::kBackdrive:
      std::printf("peak torque deviation %.3f N m\n",
                  torque_deviation(trace, sc.backdrive.command_torque,
                                   1.0 / sc.backdrive.frequency));
      break;
    case ScenarioKind::kFrictionId: {
      const FrictionFit fit = identify_friction(trace, exp.plant.geometry);
      std::printf("friction mu %.4f, R^2 %.4f over %zu samples\n", fit.mu, fit.r_squared,
                  fit.samples);
      break;
    }
    case ScenarioKind::kChirp:
      break;
  }
  return 0;
}

int cmd_frf(const Flags& f) {
  const RunConfig cfg = resolve_config(f);
  const Experiment exp = make_experiment(cfg, f.gains_file);
  const ControllerKind kind = controller_kind_from_string(cfg.selection.controller);
  const MatrixOptions mo = matrix_options(cfg, f.serial);
  const std::vector<FrfPoint> frf =
      frf_from_sine_dwell(make_dwell_runner(exp, kind, mo.dwell), mo.frf_grid, mo.parallel);
  const std::string what = "frf " + cfg.selection.controller;
  const std::string path = out_path(cfg, "frf_" + cfg.selection.controller + ".csv");
  write_text_file(path, frf_to_csv(frf, stamp_for(cfg, what)));
  write_effective_config(cfg);
  std::cout << stamp_line(stamp_for(cfg, what));
  for (const FrfPoint& p : frf) {
    std::printf("%8.3g Hz %8.2f dB %8.1f deg%s\n", p.frequency, p.magnitude_db, p.phase_deg,
                p.flagged ? "  flagged" : "");
  }
  const Bandwidth bw = bandwidth(frf);
  if (bw.found()) {
    std::printf("bandwidth %.2f Hz (%s)\n", bw.hz,
                bw.criterion == Bandwidth::Criterion::kMagnitude ? "-3 dB" : "-135 deg");
  } else {
    std::printf("bandwidth above the grid\n");
  }
  std::cout << "frf " << path << "\n";
  return 0;
}

int cmd_report(const Flags& f) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = resolve_config(f);
  const Experiment exp = make_experiment(cfg, f.gains_file);
  std::vector<ControllerKind> kinds;
  if (cfg.selection.only.empty()) {
    kinds.assign(std::begin(kAllControllers), std::end(kAllControllers));
  } else {
    for (const std::string& name : cfg.selection.only) kinds.push_back(controller_kind_from_string(name));
  }
  const std::vector<RowMeasurement> rows = measure_matrix(exp, kinds, matrix_options(cfg, f.serial));
  const ComparisonReport rep = comparison_report(rows);
  const OutputStamp stamp = stamp_for(cfg, "report");
  const std::string text = stamp_line(stamp) + report_text(rep);
  write_text_file(out_path(cfg, "report.txt"), text);
  write_text_file(out_path(cfg, "report.csv"), stamp_line(stamp) + report_csv(rep));
  bool complete = true;
  for (const RowMeasurement& r : rows) {
    const std::string name(to_string(r.kind));
    write_text_file(out_path(cfg, "frf_" + name + ".csv"),
                    frf_to_csv(r.frf, stamp_for(cfg, "frf " + name)));
    complete = complete && r.errors.empty();
  }
  write_effective_config(cfg);
  std::cout << text;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "report: %.1f s wall clock\n", secs);
  if (!complete) std::cerr << "report: some cells could not be measured\n";
  return complete ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MR-clutch hydrostatic actuator: synthesis, simulation and comparison"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config_file, "JSON config patch over the defaults");
    sub->add_option("--seed", f.seed, "noise seed")->each([&](const std::string&) { f.seed_set = true; });
    sub->add_option("--out", f.output_dir, "output directory");
    sub->add_option("--gains", f.gains_file, "gain file from synth (else synthesized)");
  };

  CLI::App* synth = app.add_subcommand("synth", "LQI and Kalman gains plus synthesis log");
  synth->add_option("--config", f.config_file, "JSON config patch over the defaults");
  synth->add_option("--out", f.output_dir, "output directory");

  CLI::App* run = app.add_subcommand("run", "simulate one scenario and write its trace");
  add_common(run);
  run->add_option("--controller", f.controller,
                  "open_loop | open_loop_comp | pid_master | pid_slave | lqgi");
  run->add_option("--scenario", f.scenario, "step | chirp | sine_dwell | backdrive | friction_id");
  run->add_option("--freq", f.frequency, "dwell or backdrive frequency, Hz");
  run->add_option("--cmd", f.command_torque, "backdrive command torque, N m")
      ->each([&](const std::string&) { f.command_set = true; });

  CLI::App* frf = app.add_subcommand("frf", "sine-dwell frequency response of one controller");
  add_common(frf);
  frf->add_option("--controller", f.controller, "controller name");
  frf->add_option("--freqs", f.frequencies, "dwell frequencies, Hz")->delimiter(',');
  frf->add_flag("--serial", f.serial, "run dwells on one thread");

  CLI::App* report = app.add_subcommand("report", "full comparison matrix against published values");
  add_common(report);
  report->add_option("--only", f.only, "comma-separated controllers");
  report->add_option("--freqs", f.frequencies, "dwell frequencies, Hz")->delimiter(',');
  report->add_flag("--serial", f.serial, "run the matrix on one thread");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(f);
    if (run->parsed()) return cmd_run(f);
    if (frf->parsed()) return cmd_frf(f);
    if (report->parsed()) return cmd_report(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

#include "mrhydro/sim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "mrhydro/synthesis.hpp"

namespace mrhydro {

namespace {

std::size_t steps_for(double span, double dt, const char* what) {
  const double ratio = span / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio)) {
    throw std::invalid_argument(std::string(what) + " is not a whole number of integration steps");
  }
  return static_cast<std::size_t>(rounded);
}

struct Motion {
  bool active = false;
  double base = 0.0;
  double amplitude = 0.0;
  double omega = 0.0;

  [[nodiscard]] std::optional<PrescribedMotion> at(double t) const {
    if (!active) return std::nullopt;
    const double s = std::sin(omega * t);
    const double c = std::cos(omega * t);
    return PrescribedMotion{base + amplitude * s, amplitude * omega * c,
                            -amplitude * omega * omega * s};
  }
};

SimTrace simulate(const Scenario& sc, const PlantParams& plant_params, Controller& controller,
                  bool backdriven) {
  if (!(sc.sim_dt > 0.0) || !(sc.control_dt > 0.0) || !(sc.duration > 0.0)) {
    throw std::invalid_argument("scenario: time steps and duration must be positive");
  }
  if (sc.record_every < 1) throw std::invalid_argument("scenario: record_every must be >= 1");
  const std::size_t per_control = steps_for(sc.control_dt, sc.sim_dt, "control period");
  const std::size_t delay_steps =
      steps_for(plant_params.clutch.tau_delay, sc.sim_dt, "MR delay");
  const std::size_t total = steps_for(sc.duration, sc.sim_dt, "duration");

  PlantParams params = plant_params;
  if (sc.friction_override) params.friction.mode = *sc.friction_override;
  const PlantModel plant(params);
  const GeometryParams& geom = params.geometry;

  // Start at the static operating point of the initial reference.
  const double p_desired0 = torque_to_pressure(geom, sc.reference_torque(0.0)).pressure;
  controller.reset(p_desired0);
  const double f0 = current_to_force(params, pressure_to_current(params, p_desired0).current);

  PlantState state;
  state.x = plant.equilibrium(f0);
  state.delay_buffer = DelayLine(delay_steps, f0);

  Motion motion;
  if (backdriven) {
    motion.active = true;
    motion.base = state.x[idx::kX3];
    motion.amplitude = sc.backdrive.amplitude;
    motion.omega = 2.0 * std::numbers::pi * sc.backdrive.frequency;
    if (auto m = motion.at(0.0)) {
      state.x[idx::kX3] = m->x3;
      state.x[idx::kV3] = m->v3;
    }
  }

  const NoiseCovariances noise_model{};
  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Vector4d sigma = noise_model.R_L.cwiseSqrt();

  SimTrace trace;
  trace.controller = std::string(controller.name());
  trace.sample_dt = sc.sim_dt * sc.record_every;
  trace.reserve(total / sc.record_every + 2);

  ControlOutput cmd{};
  Measurements y{};
  double p_desired = p_desired0;
  double torque_desired = sc.reference_torque(0.0);
  double force_cmd = f0;

  auto record = [&](double t) {
    trace.t.push_back(t);
    trace.x.push_back(state.x);
    const double pm = plant.master_pressure(state.x);
    const double ps = plant.slave_pressure(state.x);
    trace.p_master.push_back(pm);
    trace.p_slave.push_back(ps);
    trace.torque.push_back(pressure_to_torque(geom, ps));
    trace.torque_desired.push_back(torque_desired);
    trace.p_desired.push_back(p_desired);
    trace.current.push_back(cmd.current);
    trace.force_command.push_back(force_cmd);
    trace.pressure_command.push_back(cmd.pressure_command);
    trace.y.push_back(y);
    trace.saturated.push_back(cmd.saturated ? 1 : 0);
    trace.estimate.push_back(controller.diagnostics());
  };

  try {
    for (std::size_t k = 0; k < total; ++k) {
      const double t = static_cast<double>(k) * sc.sim_dt;
      if (k % per_control == 0) {
        y.x1 = state.x[idx::kX1];
        y.v1 = state.x[idx::kV1];
        y.x3 = state.x[idx::kX3];
        y.p_master = plant.master_pressure(state.x);
        y.p_slave = plant.slave_pressure(state.x);
        if (sc.noise) {
          y.x1 += sigma[0] * gauss(rng);
          y.v1 += sigma[1] * gauss(rng);
          y.x3 += sigma[2] * gauss(rng);
          y.p_master += sigma[3] * gauss(rng);
          y.p_slave += sigma[3] * gauss(rng);
        }
        torque_desired = sc.reference_torque(t);
        p_desired = torque_to_pressure(geom, torque_desired).pressure;
        cmd = controller.step({t, p_desired, y});
        if (!std::isfinite(cmd.current)) {
          throw NumericError("non-finite controller current at t = " + std::to_string(t) + " s");
        }
        force_cmd = current_to_force(params, cmd.current);
      }
      if (k % static_cast<std::size_t>(sc.record_every) == 0) record(t);

      const double delayed = state.delay_buffer.push(force_cmd);
      const double h = sc.sim_dt;
      state.x = rk4_step(plant, state.x, delayed, h, motion.at(t), motion.at(t + 0.5 * h),
                         motion.at(t + h));
    }
    record(static_cast<double>(total) * sc.sim_dt);
  } catch (const NumericError& e) {
    trace.aborted = true;
    trace.diagnostic = e.what();
  }
  return trace;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kStep: return "step";
    case ScenarioKind::kChirp: return "chirp";
    case ScenarioKind::kSineDwell: return "sine_dwell";
    case ScenarioKind::kBackdrive: return "backdrive";
    case ScenarioKind::kFrictionId: return "friction_id";
  }
  return "step";
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
  for (ScenarioKind k : {ScenarioKind::kStep, ScenarioKind::kChirp, ScenarioKind::kSineDwell,
                         ScenarioKind::kBackdrive, ScenarioKind::kFrictionId}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

void SimTrace::reserve(std::size_t n) {
  t.reserve(n);
  x.reserve(n);
  p_master.reserve(n);
  p_slave.reserve(n);
  torque.reserve(n);
  torque_desired.reserve(n);
  p_desired.reserve(n);
  current.reserve(n);
  force_command.reserve(n);
  pressure_command.reserve(n);
  y.reserve(n);
  saturated.reserve(n);
  estimate.reserve(n);
}

Scenario Scenario::make_step(ControllerKind controller) {
  Scenario sc;
  sc.kind = ScenarioKind::kStep;
  sc.controller = controller;
  sc.duration = sc.reference.step_time + 0.75;
  return sc;
}

Scenario Scenario::make_chirp(ControllerKind controller) {
  Scenario sc;
  sc.kind = ScenarioKind::kChirp;
  sc.controller = controller;
  sc.duration = 4.0;
  return sc;
}

Scenario Scenario::make_sine_dwell(ControllerKind controller, double frequency_hz, int steady_cycles) {
  if (!(frequency_hz > 0.0)) throw std::invalid_argument("dwell frequency must be > 0");
  if (steady_cycles < 10) throw std::invalid_argument("dwell needs at least 10 steady cycles");
  Scenario sc;
  sc.kind = ScenarioKind::kSineDwell;
  sc.controller = controller;
  sc.reference.dwell_frequency = frequency_hz;
  const double settle = sc.dwell_settle_time();
  // Whole number of integration steps.
  const double span = settle + steady_cycles / frequency_hz;
  sc.duration = std::ceil(span / sc.sim_dt - 1e-9) * sc.sim_dt;
  return sc;
}

Scenario Scenario::make_backdrive(ControllerKind controller, double frequency_hz,
                             double command_torque) {
  if (!(frequency_hz > 0.0)) throw std::invalid_argument("backdrive frequency must be > 0");
  Scenario sc;
  sc.kind = ScenarioKind::kBackdrive;
  sc.controller = controller;
  sc.backdrive.frequency = frequency_hz;
  sc.backdrive.command_torque = command_torque;
  sc.friction_override = FrictionMode::kStickSlipSign;
  sc.duration = std::round(sc.backdrive.cycles / frequency_hz / sc.sim_dt) * sc.sim_dt;
  return sc;
}

Scenario Scenario::make_friction_id() {
  Scenario sc;
  sc.kind = ScenarioKind::kFrictionId;
  sc.controller = ControllerKind::kOpenLoop;
  sc.backdrive.frequency = 1.0;
  // Peak piston speed 5 mm/s at 1 Hz.
  sc.backdrive.amplitude = 5e-3 / (2.0 * std::numbers::pi);
  sc.backdrive.cycles = 20;
  sc.reference.initial_torque = 0.0;
  sc.reference.ramp_end_torque = 12.0;
  sc.friction_override = FrictionMode::kStickSlipSign;
  sc.duration = 20.0;
  return sc;
}

double Scenario::dwell_settle_time() const {
  const double f = reference.dwell_frequency;
  return std::ceil(std::max(1.0, 2.0 / f) * f - 1e-9) / f;
}

double Scenario::reference_torque(double t) const {
  switch (kind) {
    case ScenarioKind::kStep:
      return t < reference.step_time ? reference.initial_torque : reference.step_torque;
    case ScenarioKind::kChirp: {
      const double rate = (reference.chirp_f1 - reference.chirp_f0) / duration;
      const double phase = 2.0 * std::numbers::pi * (reference.chirp_f0 * t + 0.5 * rate * t * t);
      return reference.offset_torque + reference.amplitude_torque * std::sin(phase);
    }
    case ScenarioKind::kSineDwell:
      return reference.offset_torque +
             reference.amplitude_torque *
                 std::sin(2.0 * std::numbers::pi * reference.dwell_frequency * t);
    case ScenarioKind::kBackdrive:
      return backdrive.command_torque;
    case ScenarioKind::kFrictionId:
      return reference.initial_torque +
             (reference.ramp_end_torque - reference.initial_torque) * std::clamp(t / duration, 0.0, 1.0);
  }
  return 0.0;
}

SimTrace run_scenario(const Scenario& sc, const PlantParams& plant, Controller& controller) {
  const bool backdriven =
      sc.kind == ScenarioKind::kBackdrive || sc.kind == ScenarioKind::kFrictionId;
  return simulate(sc, plant, controller, backdriven);
}

SimTrace run_backdrive(const Scenario& sc, const PlantParams& plant, Controller& controller) {
  if (sc.kind != ScenarioKind::kBackdrive && sc.kind != ScenarioKind::kFrictionId) {
    throw std::invalid_argument("run_backdrive needs a backdrive scenario");
  }
  return simulate(sc, plant, controller, true);
}

}  // namespace mrhydro

#include "mrhydro/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

#include "mrhydro/discretize.hpp"

namespace mrhydro {

namespace {

double lowpass_alpha(double cutoff_hz, double dt) {
  return 1.0 - std::exp(-2.0 * std::numbers::pi * cutoff_hz * dt);
}

}  // namespace

double dither_signal(double t, double p_desired, const DitherConfig& cfg) {
  if (!cfg.enabled) return 0.0;
  const double amplitude = cfg.amplitude_floor + cfg.amplitude_slope * p_desired;
  return amplitude * std::sin(2.0 * std::numbers::pi * cfg.frequency * t);
}

double max_command_pressure(const PlantParams& plant) {
  const double torque = mr_torque_from_current(plant.clutch, plant.clutch.current_max);
  const double force = std::min(torque * plant.geometry.force_per_clutch_torque(),
                                plant.max_clutch_force());
  return force_to_pressure(plant.geometry, force);
}

// --- Open loop ---------------------------------------------------------------

OpenLoopController::OpenLoopController(PlantParams plant, OpenLoopConfig cfg)
    : plant_(std::move(plant)), cfg_(cfg) {
  plant_.validate();
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("open loop: dt must be > 0");
  alpha_ = lowpass_alpha(cfg_.speed_filter_hz, cfg_.dt);
}

std::string_view OpenLoopController::name() const {
  return cfg_.friction_compensation ? "open_loop_comp" : "open_loop";
}

void OpenLoopController::reset(double) { v_filtered_ = 0.0; }

ControlOutput OpenLoopController::step(const ControlInput& in) {
  v_filtered_ += alpha_ * (in.y.v1 - v_filtered_);
  double p_cmd = in.p_desired;
  if (cfg_.friction_compensation) {
    p_cmd += friction_pressure(std::max(in.y.p_master, 0.0), v_filtered_, cfg_.compensation);
  }
  p_cmd += dither_signal(in.t, in.p_desired, cfg_.dither);
  const CurrentCommand c = pressure_to_current(plant_, p_cmd);
  return {c.current, p_cmd, c.saturated, false};
}

// --- PID ---------------------------------------------------------------------

std::string_view to_string(FeedbackTap tap) {
  return tap == FeedbackTap::kMasterPressure ? "master_pressure" : "slave_pressure";
}

PidConfig PidConfig::master_default() {
  PidConfig c;
  c.ki = 34.03;
  c.kd = 5e-4;
  c.feedback_tap = FeedbackTap::kMasterPressure;
  return c;
}

PidConfig PidConfig::slave_default() {
  PidConfig c;
  c.ki = 16.37;
  c.feedback_tap = FeedbackTap::kSlavePressure;
  return c;
}

PidController::PidController(PlantParams plant, PidConfig cfg)
    : plant_(std::move(plant)), cfg_(cfg) {
  plant_.validate();
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("pid: dt must be > 0");
  d_alpha_ = lowpass_alpha(cfg_.derivative_filter_hz, cfg_.dt);
  output_max_ = cfg_.output_max > 0.0 ? cfg_.output_max : max_command_pressure(plant_);
  if (!(output_max_ > cfg_.output_min)) throw std::invalid_argument("pid: empty output range");
}

std::string_view PidController::name() const {
  return cfg_.feedback_tap == FeedbackTap::kMasterPressure ? "pid_master" : "pid_slave";
}

void PidController::reset(double p_desired) {
  integral_ = (1.0 - cfg_.feedthrough) * p_desired;
  d_state_ = 0.0;
  prev_feedback_ = 0.0;
  primed_ = false;
}

ControlOutput PidController::step(const ControlInput& in) {
  const double feedback =
      cfg_.feedback_tap == FeedbackTap::kMasterPressure ? in.y.p_master : in.y.p_slave;
  const double error = in.p_desired - feedback;

  if (primed_) {
    const double rate = (feedback - prev_feedback_) / cfg_.dt;
    d_state_ += d_alpha_ * (rate - d_state_);
  }
  prev_feedback_ = feedback;
  primed_ = true;

  auto command = [&](double integral) {
    return cfg_.feedthrough * in.p_desired + cfg_.kp * error + integral - cfg_.kd * d_state_;
  };

  // Conditional integration: hold the integrator when the update would push a
  // saturated output further past its limit.
  const double candidate = integral_ + cfg_.ki * error * cfg_.dt;
  const double unsat = command(candidate);
  const bool high = unsat > output_max_ && error > 0.0;
  const bool low = unsat < cfg_.output_min && error < 0.0;
  if (!high && !low) integral_ = candidate;

  const double pid_out = std::clamp(command(integral_), cfg_.output_min, output_max_);
  const bool limited = pid_out != command(integral_);
  const double p_cmd = pid_out + dither_signal(in.t, in.p_desired, cfg_.dither);
  const CurrentCommand c = pressure_to_current(plant_, p_cmd);
  return {c.current, p_cmd, c.saturated || limited, false};
}

// --- LQGI --------------------------------------------------------------------

LqgiController::LqgiController(PlantParams plant, GainSet gains, LqgiConfig cfg)
    : plant_(std::move(plant)), gains_(std::move(gains)), cfg_(cfg) {
  plant_.validate();
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("lqgi: dt must be > 0");
  if (gains_.K_i() == 0.0) throw std::invalid_argument("lqgi: integral gain is zero");
  ss_ = build_state_space(plant_);

  // Continuous observer x_hat' = (A - L C) x_hat + B u + L y with u, y held
  // over the control period.
  Eigen::MatrixXd Bo(kNumStates, 1 + kNumMeasurements);
  Bo << ss_.B, gains_.L;
  const DiscreteSystem d = discretize_zoh(ss_.A - gains_.L * ss_.C, Bo, cfg_.dt);
  Ad_ = d.Ad;
  Bu_ = d.Bd.col(0);
  By_ = d.Bd.rightCols(kNumMeasurements);

  max_pressure_ = max_command_pressure(plant_);
  // The integral term alone may span the whole clutch force range.
  x_i_limit_ = pressure_to_force(plant_.geometry, max_pressure_) / std::abs(gains_.K_i());
  reset(plant_.geometry.p_dc);
}

StateVector LqgiController::linear_equilibrium(double force) const {
  // 0 = A x + B u
  return ss_.A.fullPivLu().solve(-ss_.B * force);
}

double LqgiController::steady_integrator(double p_desired) const {
  const double force = pressure_to_force(plant_.geometry, p_desired);
  const StateVector x = linear_equilibrium(force);
  return (gains_.K_ff * p_desired - (gains_.K_x() * x)(0) - force) / gains_.K_i();
}

void LqgiController::reset(double p_desired) {
  const double force = pressure_to_force(plant_.geometry, p_desired);
  x_hat_ = linear_equilibrium(force);
  x_i_ = steady_integrator(p_desired);
  faulted_ = false;
}

ControlOutput LqgiController::step(const ControlInput& in) {
  if (faulted_) return {0.0, 0.0, true, true};

  const double p_hat = (ss_.C_d * x_hat_)(0);
  const double error = in.p_desired - p_hat;
  auto regulator = [&](double x_i) {
    return -(gains_.K_x() * x_hat_)(0) - gains_.K_i() * x_i + gains_.K_ff * in.p_desired;
  };

  const double f_max = pressure_to_force(plant_.geometry, max_pressure_);
  const double candidate = std::clamp(x_i_ + cfg_.dt * error, -x_i_limit_, x_i_limit_);
  const double u_try = regulator(candidate);
  // Conditional integration on the force command.
  const double push = -gains_.K_i() * (candidate - x_i_);
  const bool high = u_try > f_max && push > 0.0;
  const bool low = u_try < 0.0 && push < 0.0;
  if (!high && !low) x_i_ = candidate;

  const double u = regulator(x_i_);
  const double p_cmd =
      force_to_pressure(plant_.geometry, u) + dither_signal(in.t, in.p_desired, cfg_.dither);
  const CurrentCommand c = pressure_to_current(plant_, p_cmd);
  const double applied = current_to_force(plant_, c.current);

  // Propagate the estimate with the force that was actually commanded.
  x_hat_ = Ad_ * x_hat_ + Bu_ * applied + By_ * in.y.sensor_vector();

  const double p_next = (ss_.C_d * x_hat_)(0);
  if (!x_hat_.allFinite() || std::abs(p_next) > cfg_.estimate_guard * max_pressure_) {
    faulted_ = true;
    return {0.0, p_cmd, true, true};
  }
  return {c.current, p_cmd, c.saturated, false};
}

// --- Factory -----------------------------------------------------------------

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kOpenLoop: return "open_loop";
    case ControllerKind::kOpenLoopCompensated: return "open_loop_comp";
    case ControllerKind::kPidMaster: return "pid_master";
    case ControllerKind::kPidSlave: return "pid_slave";
    case ControllerKind::kLqgi: return "lqgi";
  }
  return "open_loop";
}

ControllerKind controller_kind_from_string(std::string_view name) {
  for (ControllerKind k : kAllControllers) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown controller '" + std::string(name) + "'");
}

std::unique_ptr<Controller> make_controller(ControllerKind kind, const ControllerSettings& s,
                                            const PlantParams& plant, const GainSet* gains) {
  switch (kind) {
    case ControllerKind::kOpenLoop: {
      OpenLoopConfig cfg;
      cfg.friction_compensation = false;
      cfg.dither = s.dither;
      cfg.dither.enabled = false;
      cfg.speed_filter_hz = s.speed_filter_hz;
      cfg.dt = s.dt;
      return std::make_unique<OpenLoopController>(plant, cfg);
    }
    case ControllerKind::kOpenLoopCompensated: {
      OpenLoopConfig cfg;
      cfg.friction_compensation = true;
      cfg.compensation = s.compensation;
      cfg.dither = s.dither;
      cfg.speed_filter_hz = s.speed_filter_hz;
      cfg.dt = s.dt;
      return std::make_unique<OpenLoopController>(plant, cfg);
    }
    case ControllerKind::kPidMaster:
    case ControllerKind::kPidSlave: {
      PidConfig cfg = kind == ControllerKind::kPidMaster ? s.pid_master : s.pid_slave;
      cfg.dither = s.dither;
      cfg.dt = s.dt;
      return std::make_unique<PidController>(plant, cfg);
    }
    case ControllerKind::kLqgi: {
      if (gains == nullptr) throw std::invalid_argument("lqgi controller needs a GainSet");
      LqgiConfig cfg;
      cfg.dither = s.dither;
      cfg.dt = s.dt;
      return std::make_unique<LqgiController>(plant, *gains, cfg);
    }
  }
  throw std::invalid_argument("unknown controller kind");
}

}  // namespace mrhydro

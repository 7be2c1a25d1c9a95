#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mrhydro/controllers.hpp"
#include "mrhydro/plant.hpp"

using namespace mrhydro;

namespace {

ControlInput input(double t, double p_desired, double p_master = 0.0, double v1 = 0.0,
                   double p_slave = 0.0) {
  ControlInput in;
  in.t = t;
  in.p_desired = p_desired;
  in.y.p_master = p_master;
  in.y.v1 = v1;
  in.y.p_slave = p_slave;
  return in;
}

// Pressure the current command would deliver at steady state.
double delivered(const PlantParams& p, const ControlOutput& out) {
  return force_to_pressure(p.geometry, current_to_force(p, out.current));
}

}  // namespace

TEST(Dither, AmplitudeLaw) {
  DitherConfig d;
  d.amplitude_floor = 0.0;
  // Quarter period of 150 Hz puts the sine at its peak.
  const double t_peak = 0.25 / d.frequency;
  EXPECT_NEAR(dither_signal(t_peak, 1e6, d), 5e4, 1e-6);
  EXPECT_NEAR(dither_signal(3 * t_peak, 1e6, d), -5e4, 1e-6);
  d.amplitude_floor = 20e3;
  EXPECT_NEAR(dither_signal(t_peak, 1e6, d), 7e4, 1e-6);
  d.enabled = false;
  EXPECT_EQ(dither_signal(t_peak, 1e6, d), 0.0);
}

TEST(OpenLoop, WithoutCompensationOrDitherIsFeedthrough) {
  const PlantParams p;
  OpenLoopConfig cfg;
  cfg.friction_compensation = false;
  cfg.dither.enabled = false;
  OpenLoopController c(p, cfg);
  c.reset(5e5);
  for (double pd : {3e5, 7e5, 1.2e6}) {
    const ControlOutput out = c.step(input(0.0, pd, 9e5, 0.02));
    EXPECT_DOUBLE_EQ(out.pressure_command, pd);
    EXPECT_NEAR(delivered(p, out), pd, 1e-6 * pd);
  }
}

TEST(OpenLoop, CompensationAddsFrictionEstimate) {
  const PlantParams p;
  OpenLoopConfig cfg;
  cfg.dither.enabled = false;
  OpenLoopController c(p, cfg);
  c.reset(8e5);
  // Constant speed: the low-pass converges to it.
  ControlOutput out{};
  for (int k = 0; k < 200; ++k) out = c.step(input(k * 1e-3, 8e5, 9e5, 0.01));
  const double expected = 8e5 + 0.14 * 9e5 * std::tanh(1000.0 * 0.01);
  EXPECT_NEAR(out.pressure_command, expected, 1e-6 * expected);
}

TEST(OpenLoop, SpeedFilterIsFirstOrderLowPass) {
  const PlantParams p;
  OpenLoopConfig cfg;
  cfg.dither.enabled = false;
  cfg.compensation.steepness = 1e-3;  // tanh(n v) ~ n v: command is linear in v_f
  OpenLoopController c(p, cfg);
  c.reset(0.0);
  const double pm = 1e6, scale = 0.14 * pm * 1e-3;
  const ControlOutput first = c.step(input(0.0, 5e5, pm, 1.0));
  const double alpha = (first.pressure_command - 5e5) / scale;
  EXPECT_NEAR(alpha, 1.0 - std::exp(-2.0 * std::numbers::pi * 150.0 * 1e-3), 1e-6);
}

TEST(Pid, ProportionalOnlyGivesOffset) {
  const PlantParams p;
  PidConfig cfg;
  cfg.kp = 0.5;
  cfg.ki = 0.0;
  cfg.kd = 0.0;
  cfg.dither.enabled = false;
  PidController c(p, cfg);
  c.reset(0.0);
  const ControlOutput out = c.step(input(0.0, 8e5, 6e5));
  EXPECT_NEAR(out.pressure_command, 0.5 * 2e5, 1e-9);
}

TEST(Pid, IntegratorAccumulatesAndStartsBumpless) {
  const PlantParams p;
  PidConfig cfg = PidConfig::slave_default();
  cfg.dither.enabled = false;
  PidController c(p, cfg);
  c.reset(7e5);
  const ControlOutput hold = c.step(input(0.0, 7e5, 0.0, 0.0, 7e5));
  EXPECT_NEAR(hold.pressure_command, 7e5, 1e-6);
  const ControlOutput up = c.step(input(1e-3, 8e5, 0.0, 0.0, 7e5));
  EXPECT_NEAR(up.pressure_command, 7e5 + cfg.ki * 1e5 * 1e-3, 1e-6);
}

TEST(Pid, AntiWindupHoldsIntegratorAtTheLimit) {
  const PlantParams p;
  PidConfig cfg = PidConfig::master_default();
  cfg.kd = 0.0;
  cfg.dither.enabled = false;
  PidController c(p, cfg);
  c.reset(5e5);
  // Unreachable demand saturates the output for a long time.
  for (int k = 0; k < 5000; ++k) c.step(input(k * 1e-3, 5e6, 5e5));
  // Once the demand drops below the measurement the command leaves saturation at once.
  const ControlOutput out = c.step(input(5.0, 3e5, 1.4e6));
  EXPECT_LT(out.pressure_command, max_command_pressure(p));
  EXPECT_FALSE(out.saturated);
}

TEST(Pid, TapSelectsFeedbackSignal) {
  const PlantParams p;
  PidConfig master = PidConfig::master_default(), slave = PidConfig::slave_default();
  master.kd = slave.kd = 0.0;
  master.dither.enabled = slave.dither.enabled = false;
  PidController cm(p, master), cs(p, slave);
  cm.reset(6e5);
  cs.reset(6e5);
  // Master reading matches the demand, slave reading does not.
  const ControlInput in = input(0.0, 6e5, 6e5, 0.0, 5e5);
  EXPECT_NEAR(cm.step(in).pressure_command, 6e5, 1e-6);
  EXPECT_GT(cs.step(in).pressure_command, 6e5);
}

TEST(Factory, BaselineRunsWithoutDitherOthersWith) {
  const PlantParams p;
  const ControllerSettings s;
  auto base = make_controller(ControllerKind::kOpenLoop, s, p, nullptr);
  auto comp = make_controller(ControllerKind::kOpenLoopCompensated, s, p, nullptr);
  base->reset(8e5);
  comp->reset(8e5);
  const double t_peak = 0.25 / 150.0;
  EXPECT_DOUBLE_EQ(base->step(input(t_peak, 8e5)).pressure_command, 8e5);
  EXPECT_NEAR(comp->step(input(t_peak, 8e5)).pressure_command, 8e5 + 20e3 + 0.05 * 8e5, 1e-6);
  EXPECT_EQ(base->name(), "open_loop");
  EXPECT_EQ(comp->name(), "open_loop_comp");
  EXPECT_THROW(make_controller(ControllerKind::kLqgi, s, p, nullptr), std::invalid_argument);
}

TEST(Names, RoundTrip) {
  for (ControllerKind k : kAllControllers) {
    EXPECT_EQ(controller_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(controller_kind_from_string("lqr"), std::invalid_argument);
}

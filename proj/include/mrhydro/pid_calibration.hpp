#pragma once

#include <complex>
#include <vector>

#include "mrhydro/analysis.hpp"
#include "mrhydro/controllers.hpp"

namespace mrhydro {

// Linear loop of a pressure PID on the design model: pressure command -> MR
// force (pure delay plus half a control period for the hold) -> tap pressure.
struct PidLoopReport {
  double bandwidth_hz = 0.0;        // P_s / P_d closed loop
  double gain_margin_db = 0.0;      // +inf when the phase never reaches -180 deg
  double phase_crossover_hz = 0.0;
  std::vector<FrfPoint> closed_loop;
};

// Loop gain L(j w) = G_tap(j w) (kp + ki / (j w) + kd j w / (1 + j w / w_f)).
std::complex<double> pid_loop_gain(const PlantParams& plant, const PidConfig& cfg, double f_hz);

PidLoopReport analyze_pid_loop(const PlantParams& plant, const PidConfig& cfg);

struct PidCalibration {
  PidConfig config;
  PidLoopReport report;
};

// Tunes ki (kp, kd fixed) so the closed-loop bandwidth meets the target while
// the gain margin stays at or above `min_gain_margin_db`. Throws when no ki
// satisfies the margin.
PidCalibration calibrate_pid_ki(const PlantParams& plant, PidConfig base,
                                double target_bandwidth_hz, double min_gain_margin_db = 6.0);

}  // namespace mrhydro

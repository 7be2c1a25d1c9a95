#include "mrhydro/pid_calibration.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "mrhydro/state_space.hpp"

namespace mrhydro {

namespace {

using Cd = std::complex<double>;

struct TapResponse {
  Cd tap;    // command pressure -> feedback pressure
  Cd slave;  // command pressure -> slave pressure
};

TapResponse tap_response(const PlantParams& plant, const PidConfig& cfg, double f_hz) {
  const StateSpace ss = build_state_space(plant);
  const double w = 2.0 * std::numbers::pi * f_hz;
  const Eigen::Matrix<Cd, kNumStates, kNumStates> M =
      Cd(0.0, w) * Eigen::Matrix<Cd, kNumStates, kNumStates>::Identity() - ss.A.cast<Cd>();
  const Eigen::Matrix<Cd, kNumStates, 1> x = M.partialPivLu().solve(ss.B.cast<Cd>());
  const double delay = plant.clutch.tau_delay + 0.5 * cfg.dt;
  const Cd chain = plant.geometry.area_slave * std::exp(Cd(0.0, -w * delay));
  const Cd slave = (ss.C_d.cast<Cd>() * x)(0) * chain;
  const Cd master = (ss.C_master.cast<Cd>() * x)(0) * chain;
  return {cfg.feedback_tap == FeedbackTap::kMasterPressure ? master : slave, slave};
}

Cd error_path(const PidConfig& cfg, double w) { return cfg.kp + cfg.ki / Cd(0.0, w); }

Cd derivative_path(const PidConfig& cfg, double w) {
  const double wf = 2.0 * std::numbers::pi * cfg.derivative_filter_hz;
  return cfg.kd * Cd(0.0, w) / (1.0 + Cd(0.0, w) / wf);
}

}  // namespace

Cd pid_loop_gain(const PlantParams& plant, const PidConfig& cfg, double f_hz) {
  const double w = 2.0 * std::numbers::pi * f_hz;
  return tap_response(plant, cfg, f_hz).tap * (error_path(cfg, w) + derivative_path(cfg, w));
}

PidLoopReport analyze_pid_loop(const PlantParams& plant, const PidConfig& cfg) {
  PidLoopReport r;
  std::vector<double> grid;
  for (double f = 1.0; f <= 200.0 + 1e-9; f += 0.25) grid.push_back(f);
  for (double f : grid) {
    const double w = 2.0 * std::numbers::pi * f;
    const TapResponse g = tap_response(plant, cfg, f);
    const Cd c = error_path(cfg, w);
    const Cd u = (cfg.feedthrough + c) / (1.0 + g.tap * (c + derivative_path(cfg, w)));
    const Cd h = g.slave * u;
    r.closed_loop.push_back({f, 20.0 * std::log10(std::abs(h)), std::arg(h) * 180.0 / std::numbers::pi});
  }
  unwrap_phase(r.closed_loop);
  r.bandwidth_hz = bandwidth(r.closed_loop).hz;

  // Phase crossovers of the loop gain on a fine log grid.
  r.gain_margin_db = std::numeric_limits<double>::infinity();
  double prev_phase = 0.0;
  double prev_f = 0.0;
  double prev_mag = 0.0;
  const int n = 6000;
  for (int i = 0; i <= n; ++i) {
    const double f = 0.1 * std::pow(10.0, 4.0 * i / n);  // 0.1 Hz .. 1 kHz
    const Cd L = pid_loop_gain(plant, cfg, f);
    double phase = std::arg(L) * 180.0 / std::numbers::pi;
    if (i > 0) phase += 360.0 * std::round((prev_phase - phase) / 360.0);
    const double mag = std::abs(L);
    if (i > 0) {
      // Crossing of any odd multiple of -180 deg.
      const double k_prev = std::floor((prev_phase + 180.0) / 360.0);
      const double k_now = std::floor((phase + 180.0) / 360.0);
      if (k_prev != k_now) {
        const double level = 360.0 * std::max(k_prev, k_now) - 180.0;
        const double s = (level - prev_phase) / (phase - prev_phase);
        const double m = prev_mag + s * (mag - prev_mag);
        const double gm = -20.0 * std::log10(m);
        if (gm < r.gain_margin_db) {
          r.gain_margin_db = gm;
          r.phase_crossover_hz = prev_f + s * (f - prev_f);
        }
      }
    }
    prev_phase = phase;
    prev_f = f;
    prev_mag = mag;
  }
  return r;
}

PidCalibration calibrate_pid_ki(const PlantParams& plant, PidConfig base,
                                double target_bandwidth_hz, double min_gain_margin_db) {
  auto eval = [&](double ki) {
    PidConfig c = base;
    c.ki = ki;
    return PidCalibration{c, analyze_pid_loop(plant, c)};
  };
  // Coarse log sweep, then bisection on the bracket around the target.
  double lo = 0.0;
  double hi = 0.0;
  double prev_ki = 0.0;
  bool bracketed = false;
  for (int i = 0; i <= 60; ++i) {
    const double ki = 0.5 * std::pow(10.0, 4.0 * i / 60.0);
    const PidCalibration c = eval(ki);
    // Low-margin points are skipped; margin need not be monotone in ki.
    if (c.report.gain_margin_db < min_gain_margin_db) {
      prev_ki = ki;
      continue;
    }
    if (c.report.bandwidth_hz >= target_bandwidth_hz) {
      lo = prev_ki;
      hi = ki;
      bracketed = true;
      break;
    }
    prev_ki = ki;
  }
  if (!bracketed) {
    throw std::runtime_error("pid calibration: target bandwidth not reachable with " +
                             std::to_string(min_gain_margin_db) + " dB gain margin");
  }
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (eval(mid).report.bandwidth_hz < target_bandwidth_hz ? lo : hi) = mid;
  }
  PidCalibration out = eval(hi);
  if (out.report.gain_margin_db < min_gain_margin_db) {
    throw std::runtime_error("pid calibration: gain margin below limit at the target");
  }
  return out;
}

}  // namespace mrhydro

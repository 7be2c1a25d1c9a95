#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mrhydro/batch.hpp"
#include "mrhydro/sim.hpp"

namespace mrhydro {

// --- Frequency response ------------------------------------------------------

struct FrfPoint {
  double frequency = 0.0;     // Hz
  double magnitude_db = 0.0;
  double phase_deg = 0.0;     // unwrapped along the grid
  bool flagged = false;       // fit residual above 10% of the output amplitude
  double fit_residual = 0.0;  // residual RMS / output amplitude
};

struct ToneFit {
  std::vector<double> amplitude;  // one per requested frequency
  std::vector<double> phase;      // rad, y ~ a sin(2 pi f t + phase)
  double offset = 0.0;
  double residual_rms = 0.0;
};

// Least-squares fit of a constant plus one sinusoid per frequency.
ToneFit fit_tones(std::span<const double> t, std::span<const double> y,
                  const std::vector<double>& frequencies);

// Amplitude of the tone at `frequency` over [t_from, t_to).
double tone_amplitude(std::span<const double> t, std::span<const double> y, double frequency,
                      double t_from, double t_to);

// Default dwell grid, 1 to 200 Hz, stepping around the 150 Hz dither.
std::vector<double> default_frf_grid();

// Slave pressure against the ideal sinusoidal reference of a dwell run,
// over whole cycles after the settling time. Tones at `disturbances` (the
// dither) are fitted out.
FrfPoint dwell_point(const SimTrace& trace, const Scenario& sc, const GeometryParams& geometry,
                     const std::vector<double>& disturbances = {150.0});

struct DwellRun {
  SimTrace trace;
  Scenario scenario;
  GeometryParams geometry;
};
using DwellRunner = std::function<DwellRun(double frequency)>;

// Runs one dwell per frequency (concurrently when `parallel`), then unwraps.
std::vector<FrfPoint> frf_from_sine_dwell(const DwellRunner& runner,
                                          const std::vector<double>& frequencies,
                                          bool parallel = true);

struct DwellOptions {
  double offset_torque = 10.0;    // N m
  double amplitude_torque = 2.0;  // N m
  int cycles = 10;
  double sim_dt = kDefaultSimDt;
  bool noise = false;
  std::uint64_t seed = 1;
};

// Dwell runner on the nonlinear plant for one controller of an experiment.
DwellRunner make_dwell_runner(const Experiment& exp, ControllerKind kind,
                              const DwellOptions& options = {});

// H(j w) = C (j w I - A)^-1 B e^{-j w delay}.
std::vector<FrfPoint> frf_analytic(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const Eigen::MatrixXd& C, const std::vector<double>& freqs,
                                   double delay = 0.0);

void unwrap_phase(std::vector<FrfPoint>& frf);

struct Bandwidth {
  enum class Criterion { kMagnitude, kPhase, kNotReached };
  double hz = std::numeric_limits<double>::infinity();
  Criterion criterion = Criterion::kNotReached;

  [[nodiscard]] bool found() const { return criterion != Criterion::kNotReached; }
};

// First frequency with magnitude 3 dB below the first grid point or phase at
// -135 deg, linearly interpolated; the lower of the two.
Bandwidth bandwidth(const std::vector<FrfPoint>& frf);

struct LoopMargins {
  double gain_margin_db = std::numeric_limits<double>::infinity();
  double gain_crossover_hz = 0.0;  // where the phase crosses -180 deg
  double phase_margin_deg = std::numeric_limits<double>::infinity();
  double phase_crossover_hz = 0.0;  // where |L| = 1
};

// Margins of a SISO loop sampled on an increasing log grid (smallest of all
// crossings).
LoopMargins loop_margins(const std::vector<double>& freqs,
                         const std::vector<std::complex<double>>& loop);

// LQGI loop broken at the clutch force, with the MR delay `delay` included:
// L = -K_comp(s) G_y(s) e^{-s delay}.
LoopMargins lqgi_input_margins(const PlantParams& plant, const GainSet& gains, double delay);

// --- Time domain ------------------------------------------------------------

struct StepMetrics {
  double bandwidth_hz = std::numeric_limits<double>::quiet_NaN();
  double rise_time_63_ms = 0.0;
  double overshoot_pct = 0.0;
  double initial_value = 0.0;
  double final_value = 0.0;
  bool reliable = true;
};

// Step applied at t_step. The final value is the mean of the last 20% of the
// post-step window.
StepMetrics step_response_metrics(std::span<const double> t, std::span<const double> y,
                                  double t_step);
// Frequency response from a step: transform of the response increments over
// the step height. Valid once the response has settled inside the window.
std::vector<FrfPoint> step_frf(std::span<const double> t, std::span<const double> y, double t_step,
                               const std::vector<double>& freqs);

// On the joint torque of a step trace; bandwidth from step_frf on the default
// grid.
StepMetrics step_metrics(const SimTrace& trace, double t_step);

// Peak |torque - t_command| after the first backdrive period.
double torque_deviation(const SimTrace& trace, double t_command, double period);

struct FrictionFit {
  double mu = 0.0;
  double intercept = 0.0;  // Pa
  double r_squared = 0.0;
  std::size_t samples = 0;
};

// Regresses sign(v1) (F_cmd / A_M - P_M) on P_M over sliding samples
// (|v1| >= min_speed).
FrictionFit identify_friction(const SimTrace& trace, const GeometryParams& geometry,
                              double min_speed = 1e-3);

// Largest master pressure change across one dither period, centred on samples
// where the joint speed is within `band_speed` of a reversal.
double reversal_pressure_jump(const SimTrace& trace, double band_speed, double dither_hz,
                              double t_from);

// Backdrive amplitude giving `target` N m peak deviation for the open-loop
// baseline (bisection on the nonlinear simulation).
double calibrate_backdrive_amplitude(const Experiment& exp, double target = 0.60,
                                     double frequency = 1.0, double command_torque = 0.0);

}  // namespace mrhydro

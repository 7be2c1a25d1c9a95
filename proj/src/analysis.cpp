#include "mrhydro/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace mrhydro {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_deg(double deg) {
  deg = std::fmod(deg, 360.0);
  if (deg > 180.0) deg -= 360.0;
  if (deg <= -180.0) deg += 360.0;
  return deg;
}

double lerp_crossing(double f0, double v0, double f1, double v1, double level) {
  if (v1 == v0) return f1;
  return f0 + (level - v0) * (f1 - f0) / (v1 - v0);
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

ToneFit fit_tones(std::span<const double> t, std::span<const double> y,
                  const std::vector<double>& frequencies) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_tones: size mismatch");
  const int m = static_cast<int>(frequencies.size());
  const auto n = static_cast<Eigen::Index>(t.size());
  if (n < 1 + 2 * m) throw std::invalid_argument("fit_tones: too few samples");

  Eigen::MatrixXd X(n, 1 + 2 * m);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (int k = 0; k < m; ++k) {
      const double w = kTwoPi * frequencies[k] * t[i];
      X(i, 1 + 2 * k) = std::sin(w);
      X(i, 2 + 2 * k) = std::cos(w);
    }
    Y(i) = y[i];
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);

  ToneFit fit;
  fit.offset = beta(0);
  for (int k = 0; k < m; ++k) {
    const double s = beta(1 + 2 * k);
    const double c = beta(2 + 2 * k);
    fit.amplitude.push_back(std::hypot(s, c));
    fit.phase.push_back(std::atan2(c, s));
  }
  fit.residual_rms = std::sqrt((Y - X * beta).squaredNorm() / static_cast<double>(n));
  return fit;
}

double tone_amplitude(std::span<const double> t, std::span<const double> y, double frequency,
                      double t_from, double t_to) {
  const auto lo = std::lower_bound(t.begin(), t.end(), t_from) - t.begin();
  const auto hi = std::lower_bound(t.begin(), t.end(), t_to) - t.begin();
  if (hi - lo < 3) throw std::invalid_argument("tone_amplitude: empty window");
  return fit_tones(t.subspan(lo, hi - lo), y.subspan(lo, hi - lo), {frequency}).amplitude[0];
}

std::vector<double> default_frf_grid() {
  return {1,  2,  3,  4,  5,  6,  7,  8,  9,  10, 12,  14,  16,  18,  20,  22,  24, 26,
          28, 30, 32, 34, 36, 38, 40, 45, 50, 60, 70, 80, 100, 120, 140, 160, 180, 200};
}

FrfPoint dwell_point(const SimTrace& trace, const Scenario& sc, const GeometryParams& geometry,
                     const std::vector<double>& disturbances) {
  if (sc.kind != ScenarioKind::kSineDwell) throw std::invalid_argument("dwell_point: not a dwell");
  if (trace.aborted) throw NumericError("dwell_point: trace aborted: " + trace.diagnostic);
  const double f = sc.reference.dwell_frequency;
  const double t0 = sc.dwell_settle_time();
  const double t_end = trace.t.back();
  const double cycles = std::floor((t_end - t0) * f + 1e-6);
  if (cycles < 1.0) throw std::invalid_argument("dwell_point: no steady cycle in trace");
  const double t1 = t0 + cycles / f;

  const std::span<const double> t(trace.t);
  const auto lo = std::lower_bound(t.begin(), t.end(), t0 - 1e-12) - t.begin();
  const auto hi = std::lower_bound(t.begin(), t.end(), t1 - 1e-12) - t.begin();

  std::vector<double> tones{f};
  for (double d : disturbances) {
    if (std::abs(d - f) > 0.5) tones.push_back(d);
  }
  const ToneFit fit = fit_tones(t.subspan(lo, hi - lo),
                                std::span<const double>(trace.p_slave).subspan(lo, hi - lo), tones);

  const double input_amplitude =
      sc.reference.amplitude_torque / geometry.torque_per_pressure();
  FrfPoint p;
  p.frequency = f;
  p.magnitude_db = 20.0 * std::log10(fit.amplitude[0] / input_amplitude);
  p.phase_deg = wrap_deg(fit.phase[0] * 180.0 / std::numbers::pi);
  p.fit_residual = fit.residual_rms / fit.amplitude[0];
  p.flagged = p.fit_residual > 0.1;
  return p;
}

std::vector<FrfPoint> frf_from_sine_dwell(const DwellRunner& runner,
                                          const std::vector<double>& frequencies,
                                          bool parallel) {
  for (double f : frequencies) {
    if (!(f > 0.0) || f > 200.0) throw std::invalid_argument("frf: frequencies must be in (0, 200]");
  }
  if (!std::is_sorted(frequencies.begin(), frequencies.end())) {
    throw std::invalid_argument("frf: frequencies must be increasing");
  }
  std::vector<FrfPoint> out(frequencies.size());
  std::vector<std::string> errors(frequencies.size());
  const auto n = static_cast<long>(frequencies.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (long i = 0; i < n; ++i) {
    try {
      const DwellRun run = runner(frequencies[i]);
      out[i] = dwell_point(run.trace, run.scenario, run.geometry);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      throw NumericError("frf at " + std::to_string(frequencies[i]) + " Hz: " + errors[i]);
    }
  }
  unwrap_phase(out);
  return out;
}

DwellRunner make_dwell_runner(const Experiment& exp, ControllerKind kind,
                              const DwellOptions& options) {
  return [exp, kind, options](double f) {
    Scenario sc = Scenario::make_sine_dwell(kind, f, options.cycles);
    sc.reference.offset_torque = options.offset_torque;
    sc.reference.amplitude_torque = options.amplitude_torque;
    sc.noise = options.noise;
    sc.seed = options.seed;
    if (options.sim_dt != sc.sim_dt) {
      sc.sim_dt = options.sim_dt;
      sc.duration = std::ceil(sc.duration / sc.sim_dt - 1e-9) * sc.sim_dt;
    }
    auto controller = make_controller(kind, exp.settings, exp.plant, &exp.gains);
    return DwellRun{run_scenario(sc, exp.plant, *controller), sc, exp.plant.geometry};
  };
}

std::vector<FrfPoint> frf_analytic(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const Eigen::MatrixXd& C, const std::vector<double>& freqs,
                                   double delay) {
  using Cd = std::complex<double>;
  const auto n = A.rows();
  std::vector<FrfPoint> out;
  out.reserve(freqs.size());
  for (double f : freqs) {
    const double w = kTwoPi * f;
    const Eigen::MatrixXcd M =
        Cd(0.0, w) * Eigen::MatrixXcd::Identity(n, n) - A.cast<Cd>();
    const Eigen::VectorXcd x = M.partialPivLu().solve(B.col(0).cast<Cd>());
    const Cd h = (C.row(0).cast<Cd>() * x)(0) * std::exp(Cd(0.0, -w * delay));
    FrfPoint p;
    p.frequency = f;
    p.magnitude_db = 20.0 * std::log10(std::abs(h));
    p.phase_deg = std::arg(h) * 180.0 / std::numbers::pi;
    out.push_back(p);
  }
  unwrap_phase(out);
  return out;
}

void unwrap_phase(std::vector<FrfPoint>& frf) {
  if (frf.empty()) return;
  frf[0].phase_deg = wrap_deg(frf[0].phase_deg);
  for (std::size_t i = 1; i < frf.size(); ++i) {
    double p = frf[i].phase_deg;
    const double prev = frf[i - 1].phase_deg;
    p += 360.0 * std::round((prev - p) / 360.0);
    frf[i].phase_deg = p;
  }
}

Bandwidth bandwidth(const std::vector<FrfPoint>& frf) {
  Bandwidth bw;
  if (frf.empty()) return bw;
  const double ref = frf[0].magnitude_db;
  if (frf[0].phase_deg <= -135.0) return {frf[0].frequency, Bandwidth::Criterion::kPhase};

  double mag_hz = std::numeric_limits<double>::infinity();
  double phase_hz = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < frf.size(); ++i) {
    const FrfPoint& a = frf[i - 1];
    const FrfPoint& b = frf[i];
    if (!std::isfinite(mag_hz) && b.magnitude_db - ref <= -3.0) {
      mag_hz = lerp_crossing(a.frequency, a.magnitude_db - ref, b.frequency, b.magnitude_db - ref,
                             -3.0);
    }
    if (!std::isfinite(phase_hz) && b.phase_deg <= -135.0) {
      phase_hz = lerp_crossing(a.frequency, a.phase_deg, b.frequency, b.phase_deg, -135.0);
    }
  }
  if (std::isfinite(mag_hz) && mag_hz <= phase_hz) return {mag_hz, Bandwidth::Criterion::kMagnitude};
  if (std::isfinite(phase_hz)) return {phase_hz, Bandwidth::Criterion::kPhase};
  return bw;
}

LoopMargins loop_margins(const std::vector<double>& freqs,
                         const std::vector<std::complex<double>>& loop) {
  if (freqs.size() != loop.size()) throw std::invalid_argument("loop_margins: size mismatch");
  LoopMargins m;
  double prev_phase = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    double phase = std::arg(loop[i]) * 180.0 / std::numbers::pi;
    if (i > 0) phase += 360.0 * std::round((prev_phase - phase) / 360.0);
    const double mag = std::abs(loop[i]);
    if (i > 0) {
      const double prev_mag = std::abs(loop[i - 1]);
      // Odd multiple of -180 deg between the two samples.
      if (std::floor((prev_phase + 180.0) / 360.0) != std::floor((phase + 180.0) / 360.0)) {
        const double target = 360.0 * std::max(std::floor((prev_phase + 180.0) / 360.0),
                                                std::floor((phase + 180.0) / 360.0)) - 180.0;
        const double s = (target - prev_phase) / (phase - prev_phase);
        const double db = -20.0 * std::log10(prev_mag + s * (mag - prev_mag));
        if (db < m.gain_margin_db) {
          m.gain_margin_db = db;
          m.gain_crossover_hz = freqs[i - 1] + s * (freqs[i] - freqs[i - 1]);
        }
      }
      if ((prev_mag - 1.0) * (mag - 1.0) <= 0.0 && prev_mag != mag) {
        const double s = (1.0 - prev_mag) / (mag - prev_mag);
        const double ph = prev_phase + s * (phase - prev_phase);
        double pm = std::fmod(ph + 180.0, 360.0);
        if (pm > 180.0) pm -= 360.0;
        if (pm <= -180.0) pm += 360.0;
        if (std::abs(pm) < std::abs(m.phase_margin_deg)) {
          m.phase_margin_deg = pm;
          m.phase_crossover_hz = freqs[i - 1] + s * (freqs[i] - freqs[i - 1]);
        }
      }
    }
    prev_phase = phase;
  }
  return m;
}

LoopMargins lqgi_input_margins(const PlantParams& plant, const GainSet& gains, double delay) {
  using Cd = std::complex<double>;
  const StateSpace ss = build_state_space(plant);
  constexpr int nz = kNumAugmented;
  // Compensator from measurements to force: estimator plus integrator.
  Eigen::MatrixXd Az = Eigen::MatrixXd::Zero(nz, nz);
  Eigen::MatrixXd Bz = Eigen::MatrixXd::Zero(nz, kNumMeasurements);
  Eigen::RowVectorXd Cz(nz);
  Az.topLeftCorner(kNumStates, kNumStates) = ss.A - gains.L * ss.C - ss.B * gains.K_x();
  Az.block(0, kNumStates, kNumStates, 1) = -ss.B * gains.K_i();
  Az.block(kNumStates, 0, 1, kNumStates) = -ss.C_d;
  Bz.topRows(kNumStates) = gains.L;
  Cz << -gains.K_x(), -gains.K_i();

  std::vector<double> freqs;
  std::vector<Cd> loop;
  const int n = 20000;
  for (int i = 0; i <= n; ++i) {
    const double f = 0.1 * std::pow(10.0, 4.0 * i / n);  // 0.1 Hz .. 1 kHz
    const double w = kTwoPi * f;
    const Eigen::MatrixXcd Mp =
        Cd(0.0, w) * Eigen::MatrixXcd::Identity(kNumStates, kNumStates) - ss.A.cast<Cd>();
    const Eigen::VectorXcd gy = ss.C.cast<Cd>() * Mp.partialPivLu().solve(ss.B.cast<Cd>());
    const Eigen::MatrixXcd Mz = Cd(0.0, w) * Eigen::MatrixXcd::Identity(nz, nz) - Az.cast<Cd>();
    const Cd k = (Cz.cast<Cd>() * Mz.partialPivLu().solve(Bz.cast<Cd>() * gy))(0);
    freqs.push_back(f);
    loop.push_back(-k * std::exp(Cd(0.0, -w * delay)));
  }
  return loop_margins(freqs, loop);
}

StepMetrics step_response_metrics(std::span<const double> t, std::span<const double> y,
                                  double t_step) {
  if (t.size() != y.size() || t.size() < 10) throw std::invalid_argument("step: bad trace");
  const auto k0 = std::lower_bound(t.begin(), t.end(), t_step) - t.begin();
  const auto n = static_cast<std::ptrdiff_t>(t.size());
  if (n - k0 < 10) throw std::invalid_argument("step: no post-step window");

  StepMetrics m;
  m.initial_value = k0 > 0 ? mean(y.subspan(0, k0)) : y[0];
  const std::ptrdiff_t tail = std::max<std::ptrdiff_t>(1, (n - k0) / 5);
  m.final_value = mean(y.subspan(n - tail, tail));
  const double delta = m.final_value - m.initial_value;
  if (delta == 0.0) {
    m.reliable = false;
    return m;
  }
  const double sgn = delta > 0.0 ? 1.0 : -1.0;

  const double level = m.initial_value + (1.0 - std::exp(-1.0)) * delta;
  m.rise_time_63_ms = std::numeric_limits<double>::quiet_NaN();
  for (std::ptrdiff_t i = k0; i < n; ++i) {
    if (sgn * (y[i] - level) >= 0.0) {
      double tc = t[i];
      if (i > k0) tc = lerp_crossing(t[i - 1], y[i - 1], t[i], y[i], level);
      m.rise_time_63_ms = (tc - t_step) * 1e3;
      break;
    }
  }
  double peak = -std::numeric_limits<double>::infinity();
  for (std::ptrdiff_t i = k0; i < n; ++i) peak = std::max(peak, sgn * y[i]);
  m.overshoot_pct = std::max(0.0, (peak - sgn * m.final_value) / std::abs(delta) * 100.0);

  // Settled if the previous fifth of the window agrees with the last one.
  const std::ptrdiff_t prev = std::max<std::ptrdiff_t>(k0, n - 2 * tail);
  const double before = mean(y.subspan(prev, n - tail - prev));
  m.reliable = std::isfinite(m.rise_time_63_ms) && t[n - 1] - t_step >= 0.5 - 1e-9 &&
               std::abs(before - m.final_value) <= 0.02 * std::abs(delta);
  return m;
}

std::vector<FrfPoint> step_frf(std::span<const double> t, std::span<const double> y, double t_step,
                               const std::vector<double>& freqs) {
  if (t.size() != y.size() || t.size() < 10) throw std::invalid_argument("step_frf: bad trace");
  const auto k0 = std::lower_bound(t.begin(), t.end(), t_step) - t.begin();
  if (k0 < 1 || static_cast<std::size_t>(k0) + 10 > t.size()) {
    throw std::invalid_argument("step_frf: step must lie inside the trace");
  }
  const double y0 = mean(y.subspan(0, k0));
  const std::size_t tail = std::max<std::size_t>(1, (t.size() - k0) / 5);
  const double delta = mean(y.subspan(t.size() - tail, tail)) - y0;
  if (delta == 0.0) throw std::invalid_argument("step_frf: zero step");
  std::vector<FrfPoint> out;
  out.reserve(freqs.size());
  for (double f : freqs) {
    const double w = 2.0 * std::numbers::pi * f;
    // Transform of the increments, each placed at its interval midpoint.
    std::complex<double> h = 0.0;
    for (std::size_t k = static_cast<std::size_t>(k0); k < t.size(); ++k) {
      const double dy = y[k] - (k == static_cast<std::size_t>(k0) ? y0 : y[k - 1]);
      const double tm = 0.5 * (t[k] + t[k - 1]) - t_step;
      h += dy * std::exp(std::complex<double>(0.0, -w * tm));
    }
    h /= delta;
    FrfPoint p;
    p.frequency = f;
    p.magnitude_db = 20.0 * std::log10(std::abs(h));
    p.phase_deg = std::arg(h) * 180.0 / std::numbers::pi;
    out.push_back(p);
  }
  unwrap_phase(out);
  return out;
}

StepMetrics step_metrics(const SimTrace& trace, double t_step) {
  StepMetrics m = step_response_metrics(trace.t, trace.torque, t_step);
  m.bandwidth_hz = bandwidth(step_frf(trace.t, trace.torque, t_step, default_frf_grid())).hz;
  if (trace.aborted) m.reliable = false;
  return m;
}

double torque_deviation(const SimTrace& trace, double t_command, double period) {
  if (trace.size() == 0) return 0.0;
  const double t_from = trace.t.front() + period;
  double worst = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.t[i] < t_from - 1e-12) continue;
    worst = std::max(worst, std::abs(trace.torque[i] - t_command));
  }
  return worst;
}

FrictionFit identify_friction(const SimTrace& trace, const GeometryParams& geometry,
                              double min_speed) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const double v = trace.x[i][idx::kV1];
    const double p = trace.p_master[i];
    if (std::abs(v) < min_speed || p <= 0.0) continue;
    const double y = (v > 0.0 ? 1.0 : -1.0) * (trace.force_command[i] / geometry.area_master - p);
    sx += p;
    sy += y;
    sxx += p * p;
    sxy += p * y;
    syy += y * y;
    ++n;
  }
  FrictionFit fit;
  fit.samples = n;
  if (n < 3) throw std::invalid_argument("identify_friction: too few sliding samples");
  const double dn = static_cast<double>(n);
  const double cxx = sxx - sx * sx / dn;
  const double cxy = sxy - sx * sy / dn;
  const double cyy = syy - sy * sy / dn;
  if (cxx <= 0.0) throw std::invalid_argument("identify_friction: no pressure variation");
  fit.mu = cxy / cxx;
  fit.intercept = (sy - fit.mu * sx) / dn;
  fit.r_squared = cyy > 0.0 ? cxy * cxy / (cxx * cyy) : 1.0;
  return fit;
}

double reversal_pressure_jump(const SimTrace& trace, double band_speed, double dither_hz,
                              double t_from) {
  if (trace.size() < 3 || !(trace.sample_dt > 0.0)) return 0.0;
  const double half = 0.5 / (dither_hz * trace.sample_dt);  // samples
  const auto at = [&](double pos) {
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= trace.size()) return trace.p_master.back();
    return trace.p_master[i] * (1.0 - frac) + trace.p_master[i + 1] * frac;
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.t[i] < t_from || std::abs(trace.x[i][idx::kV3]) > band_speed) continue;
    const double lo = static_cast<double>(i) - half;
    const double hi = static_cast<double>(i) + half;
    if (lo < 0.0 || hi > static_cast<double>(trace.size() - 1)) continue;
    worst = std::max(worst, std::abs(at(hi) - at(lo)));
  }
  return worst;
}

double calibrate_backdrive_amplitude(const Experiment& exp, double target, double frequency,
                                     double command_torque) {
  if (!(target > 0.0)) throw std::invalid_argument("calibration target must be > 0");
  auto deviation = [&](double amplitude) {
    Scenario sc = Scenario::make_backdrive(ControllerKind::kOpenLoop, frequency, command_torque);
    sc.backdrive.amplitude = amplitude;
    auto controller = make_controller(sc.controller, exp.settings, exp.plant, &exp.gains);
    const SimTrace tr = run_backdrive(sc, exp.plant, *controller);
    if (tr.aborted) throw NumericError("calibration run aborted: " + tr.diagnostic);
    return torque_deviation(tr, command_torque, 1.0 / frequency);
  };

  double lo = 0.0;
  double hi = 1e-3;
  while (deviation(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1.0) throw NumericError("calibration: target deviation not reachable");
  }
  for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
    const double mid = 0.5 * (lo + hi);
    (deviation(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace mrhydro

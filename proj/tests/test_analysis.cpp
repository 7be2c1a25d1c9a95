#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mrhydro/analysis.hpp"
#include "mrhydro/state_space.hpp"

using namespace mrhydro;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> linear_grid(double from, double to, double step) {
  std::vector<double> f;
  for (double v = from; v <= to + 1e-9; v += step) f.push_back(v);
  return f;
}

std::vector<FrfPoint> from_complex(const std::vector<double>& freqs,
                                   const std::function<std::complex<double>(double)>& h) {
  std::vector<FrfPoint> out;
  for (double f : freqs) {
    const std::complex<double> v = h(f);
    out.push_back({f, 20.0 * std::log10(std::abs(v)), std::arg(v) * 180.0 / kPi});
  }
  unwrap_phase(out);
  return out;
}

std::complex<double> first_order(double f, double fc) {
  return 1.0 / std::complex<double>(1.0, f / fc);
}

// Unit step response of a second-order system starting at t = 0.
double second_order_step(double t, double zeta, double wn) {
  const double wd = wn * std::sqrt(1.0 - zeta * zeta);
  return 1.0 - std::exp(-zeta * wn * t) *
                   (std::cos(wd * t) + zeta / std::sqrt(1.0 - zeta * zeta) * std::sin(wd * t));
}

}  // namespace

TEST(Bandwidth, FirstOrderLowPassHitsCornerFrequency) {
  const auto frf = from_complex(linear_grid(1.0, 300.0, 0.5), [](double f) {
    return first_order(f, 64.0);
  });
  const Bandwidth bw = bandwidth(frf);
  EXPECT_EQ(bw.criterion, Bandwidth::Criterion::kMagnitude);
  EXPECT_NEAR(bw.hz, 64.0, 0.2);
}

TEST(Bandwidth, PureDelayUsesPhaseCriterion) {
  const auto frf = from_complex(linear_grid(1.0, 400.0, 0.5), [](double f) {
    return std::exp(std::complex<double>(0.0, -2.0 * kPi * f * 0.002));
  });
  const Bandwidth bw = bandwidth(frf);
  EXPECT_EQ(bw.criterion, Bandwidth::Criterion::kPhase);
  EXPECT_NEAR(bw.hz, 187.5, 0.01);
}

TEST(Bandwidth, InvariantUnderGainScaling) {
  const auto grid = linear_grid(1.0, 300.0, 1.0);
  const auto a = from_complex(grid, [](double f) { return first_order(f, 40.0); });
  const auto b = from_complex(grid, [](double f) { return 7.5 * first_order(f, 40.0); });
  EXPECT_NEAR(bandwidth(a).hz, bandwidth(b).hz, 1e-9);
}

TEST(Bandwidth, NotReachedOnFlatResponse) {
  const auto frf = from_complex(linear_grid(1.0, 100.0, 1.0), [](double) {
    return std::complex<double>(2.0, 0.0);
  });
  EXPECT_FALSE(bandwidth(frf).found());
}

TEST(Phase, UnwrapKeepsNeighboursWithinHalfTurn) {
  const auto frf = from_complex(linear_grid(1.0, 500.0, 3.0), [](double f) {
    return std::exp(std::complex<double>(0.0, -2.0 * kPi * f * 0.004)) * first_order(f, 30.0);
  });
  for (std::size_t i = 1; i < frf.size(); ++i) {
    EXPECT_LE(std::abs(frf[i].phase_deg - frf[i - 1].phase_deg), 180.0);
  }
  // 4 ms at 499 Hz is about 2 turns plus the lag.
  EXPECT_LT(frf.back().phase_deg, -700.0);
}

TEST(FrfAnalytic, MatchesClosedFormWithDelay) {
  Eigen::MatrixXd A(1, 1), B(1, 1), C(1, 1);
  A << -2.0 * kPi * 20.0;
  B << 2.0 * kPi * 20.0;
  C << 1.0;
  const std::vector<double> f{1.0, 20.0, 100.0};
  const auto frf = frf_analytic(A, B, C, f, 1e-3);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::complex<double> h =
        first_order(f[i], 20.0) * std::exp(std::complex<double>(0.0, -2.0 * kPi * f[i] * 1e-3));
    EXPECT_NEAR(frf[i].magnitude_db, 20.0 * std::log10(std::abs(h)), 1e-9);
    EXPECT_NEAR(frf[i].phase_deg, std::arg(h) * 180.0 / kPi, 1e-9);
  }
}

TEST(LoopMargins, ThirdOrderLagHasTextbookMargins) {
  // K / (s + 1)^3: phase -180 at sqrt(3) rad/s where |L| = K / 8.
  const double K = 2.0;
  std::vector<double> f;
  std::vector<std::complex<double>> L;
  for (int i = 0; i <= 20000; ++i) {
    const double hz = 1e-3 * std::pow(10.0, 4.0 * i / 20000.0);
    const std::complex<double> s(0.0, 2.0 * kPi * hz);
    f.push_back(hz);
    L.push_back(K / ((s + 1.0) * (s + 1.0) * (s + 1.0)));
  }
  const LoopMargins m = loop_margins(f, L);
  EXPECT_NEAR(m.gain_margin_db, 20.0 * std::log10(8.0 / K), 1e-3);
  EXPECT_NEAR(m.gain_crossover_hz, std::sqrt(3.0) / (2.0 * kPi), 1e-4);
  // |L| = 1 at w = sqrt(K^(2/3) - 1); phase there is -3 atan(w).
  const double wc = std::sqrt(std::pow(K, 2.0 / 3.0) - 1.0);
  EXPECT_NEAR(m.phase_margin_deg, 180.0 - 3.0 * std::atan(wc) * 180.0 / kPi, 1e-2);
}

TEST(StepMetrics, SecondOrderOvershootMatchesFormula) {
  const double wn = 2.0 * kPi * 10.0;
  for (double zeta : {0.2, 0.4, 0.6, 0.9}) {
    std::vector<double> t, y;
    for (int i = 0; i < 200000; ++i) {
      const double ti = i * 1e-5;
      t.push_back(ti);
      y.push_back(ti < 0.1 ? 0.0 : second_order_step(ti - 0.1, zeta, wn));
    }
    const StepMetrics m = step_response_metrics(t, y, 0.1);
    const double expected = 100.0 * std::exp(-kPi * zeta / std::sqrt(1.0 - zeta * zeta));
    EXPECT_NEAR(m.overshoot_pct, expected, std::max(0.01 * expected, 1e-3)) << "zeta=" << zeta;
  }
}

TEST(StepMetrics, FirstOrderRiseTimeIsTimeConstant) {
  const double tau = 0.012;
  std::vector<double> t, y;
  for (int i = 0; i < 60000; ++i) {
    const double ti = i * 1e-5;
    t.push_back(ti);
    y.push_back(ti < 0.05 ? 3.0 : 3.0 + 5.0 * (1.0 - std::exp(-(ti - 0.05) / tau)));
  }
  const StepMetrics m = step_response_metrics(t, y, 0.05);
  EXPECT_NEAR(m.rise_time_63_ms, 12.0, 0.05);
  EXPECT_NEAR(m.overshoot_pct, 0.0, 1e-9);
  EXPECT_NEAR(m.initial_value, 3.0, 1e-9);
  EXPECT_NEAR(m.final_value, 8.0, 1e-6);
}

TEST(StepFrf, FirstOrderStepRecoversCornerFrequency) {
  const double fc = 30.0, tau = 1.0 / (2.0 * kPi * fc);
  std::vector<double> t, y;
  for (int i = 0; i < 6000; ++i) {
    const double ti = i * 1e-4;
    t.push_back(ti);
    y.push_back(ti < 0.05 ? 0.0 : 12.0 * (1.0 - std::exp(-(ti - 0.05) / tau)));
  }
  const auto frf = step_frf(t, y, 0.05, default_frf_grid());
  EXPECT_NEAR(frf[0].magnitude_db, 0.0, 0.05);
  EXPECT_NEAR(bandwidth(frf).hz, fc, 0.03 * fc);
}

TEST(ToneFit, RecoversAmplitudesAndPhases) {
  std::vector<double> t, y;
  for (int i = 0; i < 10000; ++i) {
    const double ti = i * 1e-4;
    t.push_back(ti);
    y.push_back(4.0 + 2.0 * std::sin(2 * kPi * 5.0 * ti + 0.3) +
                0.5 * std::sin(2 * kPi * 150.0 * ti - 1.0));
  }
  const ToneFit fit = fit_tones(t, y, {5.0, 150.0});
  EXPECT_NEAR(fit.offset, 4.0, 1e-9);
  EXPECT_NEAR(fit.amplitude[0], 2.0, 1e-9);
  EXPECT_NEAR(fit.phase[0], 0.3, 1e-9);
  EXPECT_NEAR(fit.amplitude[1], 0.5, 1e-9);
  EXPECT_NEAR(fit.phase[1], -1.0, 1e-9);
  EXPECT_LE(fit.residual_rms, 1e-9);
}

TEST(TorqueDeviation, IgnoresFirstPeriodAndIsShiftInvariant) {
  SimTrace a;
  for (int i = 0; i < 3000; ++i) {
    const double t = i * 1e-3;
    a.t.push_back(t);
    a.torque.push_back(10.0 + (t < 1.0 ? 5.0 : 0.4 * std::sin(2 * kPi * t)));
  }
  EXPECT_NEAR(torque_deviation(a, 10.0, 1.0), 0.4, 1e-3);
  SimTrace b = a;
  for (double& v : b.torque) v -= 10.0;
  EXPECT_NEAR(torque_deviation(a, 10.0, 1.0), torque_deviation(b, 0.0, 1.0), 1e-12);
}

TEST(Dwell, FrictionlessOpenLoopMatchesLinearModel) {
  Experiment exp;
  exp.plant.friction.mode = FrictionMode::kOff;
  exp.settings.dither.enabled = false;
  const StateSpace ss = build_state_space(exp.plant);
  const double T = kDefaultControlDt;
  for (double f : {2.0, 10.0, 40.0, 100.0}) {
    Scenario sc = Scenario::make_sine_dwell(ControllerKind::kOpenLoop, f);
    sc.friction_override = FrictionMode::kOff;
    auto c = exp.factory()(sc);
    const SimTrace tr = run_scenario(sc, exp.plant, *c);
    const FrfPoint pt = dwell_point(tr, sc, exp.plant.geometry, {});

    // Pressure out over pressure in: A_s G(jw), zero-order hold, MR delay.
    const std::complex<double> jw(0.0, 2.0 * kPi * f);
    const Eigen::Matrix<std::complex<double>, 7, 7> M =
        jw * Eigen::Matrix<std::complex<double>, 7, 7>::Identity() - ss.A.cast<std::complex<double>>();
    const std::complex<double> g =
        (ss.C_d.cast<std::complex<double>>() * M.partialPivLu().solve(ss.B.cast<std::complex<double>>()))(0);
    const std::complex<double> h = g * exp.plant.geometry.area_master * (1.0 - std::exp(-jw * T)) /
                                   (jw * T) * std::exp(-jw * exp.plant.clutch.tau_delay);
    double phase = std::arg(h) * 180.0 / kPi;
    phase += 360.0 * std::round((pt.phase_deg - phase) / 360.0);
    EXPECT_NEAR(pt.magnitude_db, 20.0 * std::log10(std::abs(h)), 0.2) << f << " Hz";
    EXPECT_NEAR(pt.phase_deg, phase, 2.0) << f << " Hz";
  }
}

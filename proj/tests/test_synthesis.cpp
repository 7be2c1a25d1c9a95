#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mrhydro/analysis.hpp"
#include "mrhydro/discretize.hpp"
#include "mrhydro/pid_calibration.hpp"
#include "mrhydro/synthesis.hpp"

using namespace mrhydro;

namespace {

const GainSet& default_gains() {
  static const GainSet g = synthesize(PlantParams{}, CostWeights{}, NoiseCovariances{});
  return g;
}

}  // namespace

TEST(Synthesis, CertificatesAreTight) {
  const GainSet& g = default_gains();
  EXPECT_LE(g.regulator_residual, 1e-8);
  EXPECT_LE(g.filter_residual, 1e-8);
  EXPECT_LT(g.regulator_max_real, 0.0);
  EXPECT_LT(g.estimator_max_real, 0.0);
  EXPECT_LT(g.closed_loop_max_real, 0.0);
}

TEST(Synthesis, LinearClosedLoopHasUnitDcGain) {
  const ClosedLoop cl = lqgi_closed_loop(build_state_space(PlantParams{}), default_gains());
  const double dc = -(cl.C * cl.A.partialPivLu().solve(cl.B))(0);
  EXPECT_NEAR(dc, 1.0, 1e-6);
}

TEST(Synthesis, FifteenStateClosedLoopIsHurwitz) {
  const ClosedLoop cl = lqgi_closed_loop(build_state_space(PlantParams{}), default_gains());
  EXPECT_LT(max_real_eigenvalue(cl.A), 0.0);
}

TEST(Synthesis, FeedforwardMatchesStaticInverse) {
  const StateSpace ss = build_state_space(PlantParams{});
  const GainSet& g = default_gains();
  const Eigen::Matrix<double, 7, 7> Acl = ss.A - ss.B * g.K_x();
  const double direct = -1.0 / (ss.C_d * Acl.inverse() * ss.B)(0);
  EXPECT_NEAR(g.K_ff, direct, 1e-9 * std::abs(direct));
  EXPECT_NEAR(feedforward_gain(ss, g.K_x()), direct, 1e-9 * std::abs(direct));
}

TEST(Synthesis, RegulatorGainMinimizesCostAgainstPerturbations) {
  // J = x0' P x0 for the optimal gain; any perturbed stabilizing gain costs more.
  const StateSpace ss = build_state_space(PlantParams{});
  const CostWeights w;
  const AugmentedSystem aug = augment_with_integral(ss, w);
  const LqiGains opt = lqi_gains(ss, w);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, w.rho);
  auto cost = [&](const Eigen::Matrix<double, 1, kNumAugmented>& K) {
    const Eigen::MatrixXd Ac = aug.A - aug.B * K;
    if (!is_hurwitz(Ac)) return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd X = solve_lyapunov(Ac, aug.Q + K.transpose() * R * K);
    return X.trace();
  };
  const double j_opt = cost(opt.K);
  for (double s : {0.9, 0.97, 1.03, 1.1}) {
    EXPECT_GT(cost(opt.K * s), j_opt);
  }
}

TEST(Synthesis, CheaperControlRaisesGainNorm) {
  CostWeights heavy;
  heavy.rho *= 100.0;
  const GainSet g = synthesize(PlantParams{}, heavy, NoiseCovariances{});
  EXPECT_LT(g.K.norm(), default_gains().K.norm());
}

TEST(Synthesis, InvalidWeightsThrow) {
  CostWeights w;
  w.rho = 0.0;
  EXPECT_THROW(synthesize(PlantParams{}, w, NoiseCovariances{}), std::invalid_argument);
}

TEST(Synthesis, DefaultLoopKeepsSixDbMarginWithDelay) {
  const PlantParams p;
  const LoopMargins m = lqgi_input_margins(p, default_gains(), p.clutch.tau_delay + 0.5e-3);
  EXPECT_GE(m.gain_margin_db, 6.0);
  EXPECT_GT(m.phase_margin_deg, 30.0);
}

TEST(Discretize, ScalarZohMatchesClosedForm) {
  const double a = -3.0, b = 2.0, dt = 0.1;
  const DiscreteSystem d = discretize_zoh(Eigen::MatrixXd::Constant(1, 1, a),
                                          Eigen::MatrixXd::Constant(1, 1, b), dt);
  EXPECT_NEAR(d.Ad(0, 0), std::exp(a * dt), 1e-14);
  EXPECT_NEAR(d.Bd(0, 0), (std::exp(a * dt) - 1.0) / a * b, 1e-14);
}

TEST(Discretize, DoubleIntegrator) {
  Eigen::MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const double dt = 0.01;
  const DiscreteSystem d = discretize_zoh(A, B, dt);
  EXPECT_NEAR(d.Ad(0, 1), dt, 1e-15);
  EXPECT_NEAR(d.Bd(0, 0), 0.5 * dt * dt, 1e-15);
  EXPECT_NEAR(d.Bd(1, 0), dt, 1e-15);
}

TEST(PidCalibration, DefaultsHitTargetBandwidthsWithMargin) {
  const PlantParams p;
  const PidLoopReport master = analyze_pid_loop(p, PidConfig::master_default());
  const PidLoopReport slave = analyze_pid_loop(p, PidConfig::slave_default());
  EXPECT_NEAR(master.bandwidth_hz, 11.0, 0.1);
  EXPECT_NEAR(slave.bandwidth_hz, 3.0, 0.1);
  EXPECT_GE(master.gain_margin_db, 6.0);
  EXPECT_GE(slave.gain_margin_db, 6.0);
}

TEST(PidCalibration, ReproducesShippedIntegralGains) {
  const PlantParams p;
  const PidCalibration m = calibrate_pid_ki(p, PidConfig::master_default(), 11.0);
  const PidCalibration s = calibrate_pid_ki(p, PidConfig::slave_default(), 3.0);
  EXPECT_NEAR(m.config.ki, PidConfig::master_default().ki, 0.01);
  EXPECT_NEAR(s.config.ki, PidConfig::slave_default().ki, 0.01);
}

TEST(PidCalibration, UnreachableTargetThrows) {
  PidConfig c = PidConfig::master_default();
  c.kd = 0.0;
  EXPECT_THROW(calibrate_pid_ki(PlantParams{}, c, 11.0), std::runtime_error);
}

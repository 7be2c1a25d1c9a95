#include "mrhydro/synthesis.hpp"

#include <cmath>

#include <Eigen/LU>

#include "mrhydro/config.hpp"

namespace mrhydro {

void CostWeights::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  if (!(rho_i >= 0.0)) throw std::invalid_argument("rho_i must be >= 0");
  if (!(pressure_unit > 0.0)) throw std::invalid_argument("pressure_unit must be > 0");
}

void NoiseCovariances::validate() const {
  if (!(R_L.array() > 0.0).all()) throw std::invalid_argument("R_L must be positive definite");
  if (!(rho_L > 0.0)) throw std::invalid_argument("rho_L must be > 0");
  if (!(D.array() >= 0.0).all()) throw std::invalid_argument("D must be non-negative");
}

AugmentedSystem augment_with_integral(const StateSpace& ss, const CostWeights& w) {
  AugmentedSystem aug;
  aug.A.setZero();
  aug.A.block<1, kNumStates>(0, 1) = -ss.C_d;
  aug.A.block<kNumStates, kNumStates>(1, 1) = ss.A;
  aug.B.setZero();
  aug.B.tail<kNumStates>() = ss.B;
  const double scale = 1.0 / (w.pressure_unit * w.pressure_unit);
  aug.Q.setZero();
  aug.Q(0, 0) = w.rho_i * scale;
  aug.Q.block<kNumStates, kNumStates>(1, 1) = ss.C_d.transpose() * ss.C_d * scale;
  return aug;
}

double feedforward_gain(const StateSpace& ss, const Eigen::Matrix<double, 1, kNumStates>& K_x) {
  const Eigen::Matrix<double, kNumStates, kNumStates> Acl = ss.A - ss.B * K_x;
  Eigen::FullPivLU<Eigen::Matrix<double, kNumStates, kNumStates>> lu(Acl);
  if (!lu.isInvertible()) throw SynthesisError("feedforward: A - B K_x is singular");
  const double dc = (ss.C_d * lu.solve(ss.B))(0, 0);
  if (dc == 0.0 || !std::isfinite(dc)) {
    throw SynthesisError("feedforward: zero DC gain from force to slave pressure");
  }
  return -1.0 / dc;
}

LqiGains lqi_gains(const StateSpace& ss, const CostWeights& w) {
  w.validate();
  const AugmentedSystem aug = augment_with_integral(ss, w);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, w.rho);
  const CareSolution care = solve_care(aug.A, aug.B, aug.Q, R);

  LqiGains g;
  g.K = (aug.B.transpose() * care.P) / w.rho;
  g.care_residual = care.relative_residual;
  g.max_real_closed_loop = max_real_eigenvalue(aug.A - aug.B * g.K);
  if (!(g.max_real_closed_loop < 0.0)) {
    throw SynthesisError("lqi: augmented closed loop is not Hurwitz");
  }
  g.K_ff = feedforward_gain(ss, g.K_x());
  return g;
}

KalmanGain kalman_gain(const StateSpace& ss, const NoiseCovariances& nc) {
  nc.validate();
  const Eigen::MatrixXd R = nc.R_L.asDiagonal();
  const Eigen::MatrixXd Q = nc.Q_L();
  const CareSolution care = solve_care(ss.A.transpose(), ss.C.transpose(), Q, R);

  KalmanGain k;
  k.L = care.P * ss.C.transpose() * nc.R_L.cwiseInverse().asDiagonal();
  k.care_residual = care.relative_residual;
  k.max_real_error_dynamics = max_real_eigenvalue(ss.A - k.L * ss.C);
  if (!(k.max_real_error_dynamics < 0.0)) {
    throw SynthesisError("kalman: estimator error dynamics are not Hurwitz");
  }
  return k;
}

ClosedLoop lqgi_closed_loop(const StateSpace& ss, const GainSet& gains) {
  constexpr int n = kNumStates;
  const auto Kx = gains.K_x();
  const double Ki = gains.K_i();
  ClosedLoop cl;
  cl.A.setZero();
  cl.B.setZero();
  cl.C.setZero();
  // Plant: x' = A x + B u, u = -K_x x_hat - K_i x_i + K_ff P_d.
  cl.A.block<n, n>(0, 0) = ss.A;
  cl.A.block<n, n>(0, n) = -ss.B * Kx;
  cl.A.block<n, 1>(0, 2 * n) = -ss.B * Ki;
  // Estimator: x_hat' = A x_hat + B u + L (C x - C x_hat).
  cl.A.block<n, n>(n, 0) = gains.L * ss.C;
  cl.A.block<n, n>(n, n) = ss.A - gains.L * ss.C - ss.B * Kx;
  cl.A.block<n, 1>(n, 2 * n) = -ss.B * Ki;
  // Integrator on the estimated slave pressure error.
  cl.A.block<1, n>(2 * n, n) = -ss.C_d;
  cl.B.segment<n>(0) = ss.B * gains.K_ff;
  cl.B.segment<n>(n) = ss.B * gains.K_ff;
  cl.B(2 * n) = 1.0;
  cl.C.segment<n>(0) = ss.C_d;
  return cl;
}

GainSet synthesize(const PlantParams& params, const CostWeights& w,
                   const NoiseCovariances& nc) {
  const StateSpace ss = build_state_space(params);
  const LqiGains reg = lqi_gains(ss, w);
  const KalmanGain kal = kalman_gain(ss, nc);

  GainSet gs;
  gs.K = reg.K;
  gs.K_ff = reg.K_ff;
  gs.L = kal.L;
  gs.weights = w;
  gs.noise = nc;
  gs.plant_hash = plant_hash(params);
  gs.regulator_residual = reg.care_residual;
  gs.filter_residual = kal.care_residual;
  gs.regulator_max_real = reg.max_real_closed_loop;
  gs.estimator_max_real = kal.max_real_error_dynamics;
  gs.closed_loop_max_real = max_real_eigenvalue(lqgi_closed_loop(ss, gs).A);
  if (!(gs.closed_loop_max_real < 0.0)) {
    throw SynthesisError("synthesis: 15-state closed loop is not Hurwitz");
  }
  return gs;
}

}  // namespace mrhydro

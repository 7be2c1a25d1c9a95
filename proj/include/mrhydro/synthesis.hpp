#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "mrhydro/care.hpp"
#include "mrhydro/params.hpp"
#include "mrhydro/state_space.hpp"

namespace mrhydro {

inline constexpr int kNumAugmented = kNumStates + 1;

// Integrand y_d^2 + rho_i x_i^2 + rho u^2, with pressures (and the pressure
// integral) expressed in units of `pressure_unit` Pa and the force in N.
struct CostWeights {
  double rho = 1e-4;
  double rho_i = 1000.0;
  double pressure_unit = 1e5;

  void validate() const;
};

struct NoiseCovariances {
  Eigen::Vector4d R_L = (Eigen::Vector4d() << 3.6e-9, 1e-6, 2.5e-11, 5.6e5).finished();
  double rho_L = 3e-5;
  Eigen::Matrix<double, kNumStates, 1> D =
      (Eigen::Matrix<double, kNumStates, 1>() << 1, 1e5, 1, 1, 1, 1e6, 1).finished();

  void validate() const;
  [[nodiscard]] Eigen::Matrix<double, kNumStates, kNumStates> Q_L() const {
    return (rho_L * D).asDiagonal();
  }
};

struct LqiGains {
  // u = -K [x_i; x] + K_ff P_d with x_i' = P_d - P_s.
  Eigen::Matrix<double, 1, kNumAugmented> K;
  double K_ff = 0.0;
  double care_residual = 0.0;
  double max_real_closed_loop = 0.0;

  [[nodiscard]] double K_i() const { return K(0); }
  [[nodiscard]] Eigen::Matrix<double, 1, kNumStates> K_x() const {
    return K.tail<kNumStates>();
  }
};

struct KalmanGain {
  Eigen::Matrix<double, kNumStates, kNumMeasurements> L;
  double care_residual = 0.0;
  double max_real_error_dynamics = 0.0;
};

struct GainSet {
  Eigen::Matrix<double, 1, kNumAugmented> K;
  double K_ff = 0.0;
  Eigen::Matrix<double, kNumStates, kNumMeasurements> L;
  CostWeights weights;
  NoiseCovariances noise;
  std::string plant_hash;

  // Synthesis certificates.
  double regulator_residual = 0.0;
  double filter_residual = 0.0;
  double regulator_max_real = 0.0;
  double estimator_max_real = 0.0;
  double closed_loop_max_real = 0.0;

  [[nodiscard]] double K_i() const { return K(0); }
  [[nodiscard]] Eigen::Matrix<double, 1, kNumStates> K_x() const {
    return K.tail<kNumStates>();
  }
};

struct AugmentedSystem {
  Eigen::Matrix<double, kNumAugmented, kNumAugmented> A;
  Eigen::Matrix<double, kNumAugmented, 1> B;
  Eigen::Matrix<double, kNumAugmented, kNumAugmented> Q;
};

AugmentedSystem augment_with_integral(const StateSpace& ss, const CostWeights& w);

LqiGains lqi_gains(const StateSpace& ss, const CostWeights& w);
KalmanGain kalman_gain(const StateSpace& ss, const NoiseCovariances& nc);

// Feedforward for a given state-feedback partition: -1 / (C_d (A - B K_x)^-1 B).
double feedforward_gain(const StateSpace& ss, const Eigen::Matrix<double, 1, kNumStates>& K_x);

GainSet synthesize(const PlantParams& params, const CostWeights& w,
                   const NoiseCovariances& nc);

// Linear interconnection of plant, Kalman filter and integral regulator:
// state [x; x_hat; x_i], input P_d, output P_s.
struct ClosedLoop {
  Eigen::Matrix<double, 15, 15> A;
  Eigen::Matrix<double, 15, 1> B;
  Eigen::Matrix<double, 1, 15> C;
};

ClosedLoop lqgi_closed_loop(const StateSpace& ss, const GainSet& gains);

}  // namespace mrhydro

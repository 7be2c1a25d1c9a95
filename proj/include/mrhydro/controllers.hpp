#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "mrhydro/params.hpp"
#include "mrhydro/plant.hpp"
#include "mrhydro/state_space.hpp"
#include "mrhydro/synthesis.hpp"

namespace mrhydro {

inline constexpr double kDefaultControlDt = 1e-3;  // 1 kHz

// Sinusoidal pressure command superimposed on the reference to keep the ball
// screw slipping. Amplitude grows affinely with the desired pressure.
struct DitherConfig {
  double frequency = 150.0;        // Hz
  double amplitude_slope = 0.05;   // fraction of desired pressure
  double amplitude_floor = 20e3;   // Pa
  bool enabled = true;
};

double dither_signal(double t, double p_desired, const DitherConfig& cfg);

struct Measurements {
  double x1 = 0.0;        // master piston position (m)
  double v1 = 0.0;        // master piston speed (m/s)
  double x3 = 0.0;        // joint position, reflected (m)
  double p_master = 0.0;  // Pa
  double p_slave = 0.0;   // Pa, validation sensor (slave tap PID only)

  [[nodiscard]] Eigen::Vector4d sensor_vector() const { return {x1, v1, x3, p_master}; }
};

struct ControlInput {
  double t = 0.0;
  double p_desired = 0.0;
  Measurements y;
};

struct ControlOutput {
  double current = 0.0;           // A, what is sent to the clutch driver
  double pressure_command = 0.0;  // Pa, before conversion (incl. dither)
  bool saturated = false;
  bool fault = false;
};

class Controller {
 public:
  virtual ~Controller() = default;

  // Bumpless start at the static operating point of `p_desired`.
  virtual void reset(double p_desired) = 0;
  virtual ControlOutput step(const ControlInput& in) = 0;
  [[nodiscard]] virtual std::string_view name() const = 0;
  [[nodiscard]] virtual std::unique_ptr<Controller> clone() const = 0;
  // Controller-specific diagnostic vector (the state estimate for LQGI).
  [[nodiscard]] virtual Eigen::VectorXd diagnostics() const { return {}; }
};

// --- Open loop with optional friction compensation --------------------------

struct OpenLoopConfig {
  bool friction_compensation = true;
  FrictionParams compensation{};      // model used for the estimate (tanh)
  double speed_filter_hz = 150.0;     // low-pass on the measured screw speed
  DitherConfig dither{};
  double dt = kDefaultControlDt;
};

class OpenLoopController final : public Controller {
 public:
  OpenLoopController(PlantParams plant, OpenLoopConfig cfg);

  void reset(double p_desired) override;
  ControlOutput step(const ControlInput& in) override;
  [[nodiscard]] std::string_view name() const override;
  [[nodiscard]] std::unique_ptr<Controller> clone() const override {
    return std::make_unique<OpenLoopController>(*this);
  }

  [[nodiscard]] double filtered_speed() const { return v_filtered_; }

 private:
  PlantParams plant_;
  OpenLoopConfig cfg_;
  double alpha_ = 1.0;
  double v_filtered_ = 0.0;
};

// --- Pressure PID -----------------------------------------------------------

enum class FeedbackTap { kMasterPressure, kSlavePressure };

std::string_view to_string(FeedbackTap tap);

struct PidConfig {
  double kp = 0.0;
  double ki = 0.0;              // 1/s
  double kd = 0.0;              // s, on the measurement, low-pass filtered
  double derivative_filter_hz = 150.0;
  double feedthrough = 0.0;     // fraction of P_d added to the command
  FeedbackTap feedback_tap = FeedbackTap::kMasterPressure;
  double output_min = 0.0;      // Pa
  double output_max = 0.0;      // Pa, 0 selects the clutch limit
  DitherConfig dither{};
  double dt = kDefaultControlDt;

  // Calibrated defaults (see pid_calibration.hpp).
  static PidConfig master_default();
  static PidConfig slave_default();
};

class PidController final : public Controller {
 public:
  PidController(PlantParams plant, PidConfig cfg);

  void reset(double p_desired) override;
  ControlOutput step(const ControlInput& in) override;
  [[nodiscard]] std::string_view name() const override;
  [[nodiscard]] std::unique_ptr<Controller> clone() const override {
    return std::make_unique<PidController>(*this);
  }

  [[nodiscard]] double integrator() const { return integral_; }
  [[nodiscard]] const PidConfig& config() const { return cfg_; }

 private:
  PlantParams plant_;
  PidConfig cfg_;
  double integral_ = 0.0;       // Pa
  double d_state_ = 0.0;        // filtered derivative of the feedback (Pa/s)
  double prev_feedback_ = 0.0;
  bool primed_ = false;
  double d_alpha_ = 1.0;
  double output_max_ = 0.0;
};

// --- LQGI -------------------------------------------------------------------

struct LqgiConfig {
  DitherConfig dither{};
  double dt = kDefaultControlDt;
  double estimate_guard = 1e3;  // fault when |P_s_hat| exceeds guard * max pressure
};

class LqgiController final : public Controller {
 public:
  LqgiController(PlantParams plant, GainSet gains, LqgiConfig cfg);

  void reset(double p_desired) override;
  ControlOutput step(const ControlInput& in) override;
  [[nodiscard]] std::string_view name() const override { return "lqgi"; }
  [[nodiscard]] std::unique_ptr<Controller> clone() const override {
    return std::make_unique<LqgiController>(*this);
  }
  [[nodiscard]] Eigen::VectorXd diagnostics() const override { return x_hat_; }

  [[nodiscard]] const StateVector& estimate() const { return x_hat_; }
  [[nodiscard]] double integrator() const { return x_i_; }
  [[nodiscard]] double integrator_limit() const { return x_i_limit_; }
  [[nodiscard]] bool faulted() const { return faulted_; }

 private:
  [[nodiscard]] StateVector linear_equilibrium(double force) const;
  [[nodiscard]] double steady_integrator(double p_desired) const;

  PlantParams plant_;
  GainSet gains_;
  LqgiConfig cfg_;
  StateSpace ss_;
  Eigen::Matrix<double, kNumStates, kNumStates> Ad_;
  Eigen::Matrix<double, kNumStates, 1> Bu_;
  Eigen::Matrix<double, kNumStates, kNumMeasurements> By_;
  StateVector x_hat_ = StateVector::Zero();
  double x_i_ = 0.0;
  double x_i_limit_ = 0.0;
  double max_pressure_ = 0.0;
  bool faulted_ = false;
};

// --- Factory ----------------------------------------------------------------

enum class ControllerKind { kOpenLoop, kOpenLoopCompensated, kPidMaster, kPidSlave, kLqgi };

std::string_view to_string(ControllerKind kind);
ControllerKind controller_kind_from_string(std::string_view name);
inline constexpr ControllerKind kAllControllers[] = {
    ControllerKind::kOpenLoop, ControllerKind::kOpenLoopCompensated,
    ControllerKind::kPidMaster, ControllerKind::kPidSlave, ControllerKind::kLqgi};

struct ControllerSettings {
  double dt = kDefaultControlDt;
  DitherConfig dither{};
  FrictionParams compensation{};
  double speed_filter_hz = 150.0;
  PidConfig pid_master = PidConfig::master_default();
  PidConfig pid_slave = PidConfig::slave_default();
  CostWeights weights{};
  NoiseCovariances noise{};
};

// The baseline open loop runs without dither; every other controller uses it.
std::unique_ptr<Controller> make_controller(ControllerKind kind, const ControllerSettings& s,
                                            const PlantParams& plant, const GainSet* gains);

// Largest slave pressure the clutch can hold (current_max on the static curve).
double max_command_pressure(const PlantParams& plant);

}  // namespace mrhydro

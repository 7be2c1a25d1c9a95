#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "mrhydro/params.hpp"

namespace mrhydro {

// Plant state ordering: x1 v1 x2 v2 x3 v3 f_mr.
inline constexpr int kNumStates = 7;
using StateVector = Eigen::Matrix<double, kNumStates, 1>;

namespace idx {
inline constexpr int kX1 = 0;
inline constexpr int kV1 = 1;
inline constexpr int kX2 = 2;
inline constexpr int kV2 = 3;
inline constexpr int kX3 = 4;
inline constexpr int kV3 = 5;
inline constexpr int kFmr = 6;
}  // namespace idx

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- MR clutch statics ------------------------------------------------------

// Throws std::domain_error outside [0, current_max].
double mr_torque_from_current(const MRClutchParams& clutch, double current);

struct CurrentCommand {
  double current = 0.0;
  bool saturated = false;
};

// Inverse of the static curve on [0, current_max]. Torques below the
// zero-current torque map to 0 A and torques above the curve's maximum map to
// current_max; both cases flag saturation.
CurrentCommand current_from_torque(const MRClutchParams& clutch, double torque);

// --- Ball screw friction ----------------------------------------------------

// Pressure deviation caused by screw friction for a master pressure and
// ball-nut speed. Odd in v1.
double friction_pressure(double p_master, double v1,
                         const FrictionParams& friction);

// --- Unit conversions -------------------------------------------------------

struct PressureCommand {
  double pressure = 0.0;
  bool feasible = true;  // false when the line would need to pull below 0 Pa
};

PressureCommand torque_to_pressure(const GeometryParams& geometry,
                                   double joint_torque);
double pressure_to_torque(const GeometryParams& geometry, double pressure);

// Slave pressure <-> steady MR force (static force balance of the chain).
double pressure_to_force(const GeometryParams& geometry, double pressure);
double force_to_pressure(const GeometryParams& geometry, double force);

// Full command chain used by every controller: desired slave pressure ->
// clutch force -> clutch torque -> coil current.
CurrentCommand pressure_to_current(const PlantParams& params, double pressure);
// Steady MR force produced by a coil current, clamped to [0, max_clutch_force].
double current_to_force(const PlantParams& params, double current);

// --- Delay line -------------------------------------------------------------

// Fixed-length FIFO realising the MR pure delay at the integration step.
class DelayLine {
 public:
  DelayLine() = default;
  DelayLine(std::size_t length, double fill);

  // Pushes the newest sample and returns the one delayed by length() steps.
  double push(double value);
  [[nodiscard]] std::size_t length() const { return buffer_.size(); }
  void fill(double value);

 private:
  std::vector<double> buffer_;
  std::size_t head_ = 0;
};

// --- Continuous-time plant --------------------------------------------------

struct PrescribedMotion {
  double x3 = 0.0;
  double v3 = 0.0;
  double a3 = 0.0;
};

struct PlantState {
  StateVector x = StateVector::Zero();
  DelayLine delay_buffer;
};

class PlantModel {
 public:
  explicit PlantModel(PlantParams params);

  [[nodiscard]] const PlantParams& params() const { return params_; }

  // Time derivative of the state for a (delayed) steady MR force command.
  // With a prescribed motion, the x3/v3 rows follow the constraint.
  [[nodiscard]] StateVector derivative(
      const StateVector& x, double f_mr_steady_cmd,
      const std::optional<PrescribedMotion>& motion = std::nullopt) const;

  [[nodiscard]] double master_pressure(const StateVector& x) const;
  [[nodiscard]] double slave_pressure(const StateVector& x) const;
  // Friction force acting on m1 (opposes v1).
  [[nodiscard]] double friction_force(const StateVector& x) const;

  // Static equilibrium of the blocked chain under a steady MR force.
  [[nodiscard]] StateVector equilibrium(double f_mr) const;

  // Kinetic + spring potential energy of the mechanical block.
  [[nodiscard]] double mechanical_energy(const StateVector& x) const;

 private:
  PlantParams params_;
};

// One classical RK4 step with the command held over the step.
StateVector rk4_step(const PlantModel& plant, const StateVector& x,
                     double f_mr_cmd, double dt,
                     const std::optional<PrescribedMotion>& start = std::nullopt,
                     const std::optional<PrescribedMotion>& mid = std::nullopt,
                     const std::optional<PrescribedMotion>& end = std::nullopt);

}  // namespace mrhydro

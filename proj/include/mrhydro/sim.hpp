#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrhydro/controllers.hpp"
#include "mrhydro/params.hpp"
#include "mrhydro/plant.hpp"

namespace mrhydro {

inline constexpr double kDefaultSimDt = 1e-4;  // 10 kHz plant integration

// Piston (x3, reflected at the slave) amplitude for which the open-loop
// baseline shows a 0.60 N m peak deviation at 0 N m, 1 Hz. Produced by
// calibrate_backdrive_amplitude() and reused for the 5 Hz study.
inline constexpr double kCalibratedBackdriveAmplitude = 1.14748e-3;  // m

enum class ScenarioKind { kStep, kChirp, kSineDwell, kBackdrive, kFrictionId };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(std::string_view name);

struct ReferenceProfile {
  double initial_torque = 0.0;   // N m, held before the step
  double step_torque = 12.0;     // N m
  double step_time = 0.05;       // s
  double offset_torque = 10.0;   // N m, chirp / dwell / ramp start
  double amplitude_torque = 2.0; // N m, chirp / dwell
  double chirp_f0 = 0.0;         // Hz
  double chirp_f1 = 200.0;       // Hz
  double dwell_frequency = 1.0;  // Hz
  double ramp_end_torque = 20.0; // N m, friction identification
};

struct BackdriveProfile {
  double amplitude = kCalibratedBackdriveAmplitude;  // m
  double frequency = 1.0;                            // Hz
  int cycles = 5;
  double command_torque = 0.0;                       // N m
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::kStep;
  ReferenceProfile reference{};
  BackdriveProfile backdrive{};
  ControllerKind controller = ControllerKind::kOpenLoop;
  bool noise = false;
  std::uint64_t seed = 1;
  double duration = 0.6;  // s
  double sim_dt = kDefaultSimDt;
  double control_dt = kDefaultControlDt;
  std::optional<FrictionMode> friction_override;
  int record_every = 1;  // record one row per this many integration steps

  static Scenario make_step(ControllerKind controller);
  static Scenario make_chirp(ControllerKind controller);
  // Settles, then runs at least `steady_cycles` cycles at frequency_hz.
  static Scenario make_sine_dwell(ControllerKind controller, double frequency_hz,
                             int steady_cycles = 10);
  // Friction mode is stick-slip (sign) for backdriving, as on the hardware.
  static Scenario make_backdrive(ControllerKind controller, double frequency_hz,
                            double command_torque);
  // 1 Hz backdrive at <= 5 mm/s with a slowly ramped clutch torque.
  static Scenario make_friction_id();

  // Desired joint torque at time t.
  [[nodiscard]] double reference_torque(double t) const;
  // Settling time before the dwell's steady window (sine dwell only).
  [[nodiscard]] double dwell_settle_time() const;
};

struct SimTrace {
  std::vector<double> t;
  std::vector<StateVector> x;
  std::vector<double> p_master;      // true, Pa
  std::vector<double> p_slave;       // true, Pa
  std::vector<double> torque;        // joint torque from slave pressure, N m
  std::vector<double> torque_desired;
  std::vector<double> p_desired;
  std::vector<double> current;       // A, held command
  std::vector<double> force_command; // N, steady MR force before the delay
  std::vector<double> pressure_command;
  std::vector<Measurements> y;       // sampled (noisy) measurements, held
  std::vector<int> saturated;
  std::vector<Eigen::VectorXd> estimate;

  bool aborted = false;
  std::string diagnostic;
  std::string controller;
  double sample_dt = 0.0;

  [[nodiscard]] std::size_t size() const { return t.size(); }
  void reserve(std::size_t n);
};

// Fixed-step RK4 at sc.sim_dt, controller at sc.control_dt with the command
// held between calls, MR delay by a ring buffer of commanded force.
SimTrace run_scenario(const Scenario& sc, const PlantParams& plant, Controller& controller);

// Same engine; x3 follows the prescribed sinusoid.
SimTrace run_backdrive(const Scenario& sc, const PlantParams& plant, Controller& controller);

}  // namespace mrhydro

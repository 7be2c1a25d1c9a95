#pragma once

#include <numbers>
#include <string_view>

namespace mrhydro {

// Sixth-order transmission, all values reflected at the slave piston.
struct TransmissionParams {
  double m1 = 11.0;    // clutch + ball screw + master piston (kg)
  double m2 = 7.0;     // hydraulic fluid (kg)
  double m3 = 976.0;   // robot structure + payload (kg)
  double k1 = 6.2e5;   // power unit side stiffness (N/m)
  double k2 = 5.3e5;   // robot side stiffness (N/m)
  double k3 = 2.2e5;   // structure + base stiffness (N/m)
  double b1 = 650.0;   // clutch + ball screw damping (N s/m)
  double b2 = 204.0;   // hydraulic viscous damping (N s/m)
  double b3 = 10000.0; // structure + base damping (N s/m)

  void validate() const;
};

// Static torque curve T(i) = c3 i^3 + c2 i^2 + c1 i + c0 followed by a pure
// delay and a first-order lag.
struct MRClutchParams {
  double poly_c3 = -0.015;
  double poly_c2 = 0.104;
  double poly_c1 = 0.225;
  double poly_c0 = 0.044;
  double tau_delay = 0.002;                       // s
  double omega_c = 2.0 * std::numbers::pi * 64.0; // rad/s
  double torque_max = 2.0;                        // N m
  double current_max = 3.0;                       // A

  void validate() const;
};

enum class FrictionMode { kSmoothTanh, kStickSlipSign, kOff };

std::string_view to_string(FrictionMode mode);
FrictionMode friction_mode_from_string(std::string_view name);

struct FrictionParams {
  double mu = 0.14;
  double steepness = 1000.0; // s/m, slope of tanh(n v)
  FrictionMode mode = FrictionMode::kSmoothTanh;

  void validate() const;
};

namespace defaults {
inline constexpr double kMaxClutchTorque = 2.0;      // N m
inline constexpr double kScrewLead = 0.008;          // m/rev
inline constexpr double kMaxJointTorque = 29.0;      // N m
inline constexpr double kMaxPressure = 2.31e6;       // Pa
inline constexpr double kDcPressure = 205e3;         // Pa
inline constexpr double kJointToClutchRatio = 14.7;

// Ideal screw at the max operating point: F = T 2 pi / lead = A_m P_max.
inline constexpr double kAreaMaster =
    kMaxClutchTorque * 2.0 * std::numbers::pi / kScrewLead / kMaxPressure;
inline constexpr double kAreaSlave = kAreaMaster;
inline constexpr double kPulleyRadius =
    kMaxJointTorque / kMaxPressure / kAreaSlave;
}  // namespace defaults

struct GeometryParams {
  double area_master = defaults::kAreaMaster; // m^2
  double area_slave = defaults::kAreaSlave;   // m^2
  double r_pulley = defaults::kPulleyRadius;  // m
  double screw_lead = defaults::kScrewLead;   // m/rev
  double ratio_R = defaults::kJointToClutchRatio;
  double p_dc = defaults::kDcPressure;        // Pa

  void validate() const;

  // Linear force on the master piston per N m of clutch torque.
  [[nodiscard]] double force_per_clutch_torque() const {
    return 2.0 * std::numbers::pi / screw_lead;
  }
  // Joint torque per Pa of slave gauge pressure above the DC pretension.
  [[nodiscard]] double torque_per_pressure() const {
    return area_slave * r_pulley;
  }
};

struct PlantParams {
  TransmissionParams transmission;
  MRClutchParams clutch;
  FrictionParams friction;
  GeometryParams geometry;

  void validate() const;

  // Upper bound on the steady MR force: one line can only push.
  [[nodiscard]] double max_clutch_force() const {
    return clutch.torque_max * geometry.force_per_clutch_torque();
  }
};

}  // namespace mrhydro

#include "mrhydro/plant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mrhydro {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be strictly positive");
  }
}

double poly(const MRClutchParams& c, double i) {
  return ((c.poly_c3 * i + c.poly_c2) * i + c.poly_c1) * i + c.poly_c0;
}

double poly_slope(const MRClutchParams& c, double i) {
  return (3.0 * c.poly_c3 * i + 2.0 * c.poly_c2) * i + c.poly_c1;
}

}  // namespace

void TransmissionParams::validate() const {
  require_positive(m1, "m1");
  require_positive(m2, "m2");
  require_positive(m3, "m3");
  require_positive(k1, "k1");
  require_positive(k2, "k2");
  require_positive(k3, "k3");
  require_positive(b1, "b1");
  require_positive(b2, "b2");
  require_positive(b3, "b3");
}

void MRClutchParams::validate() const {
  if (!(tau_delay >= 0.0)) throw std::invalid_argument("tau_delay must be >= 0");
  require_positive(omega_c, "omega_c");
  require_positive(torque_max, "torque_max");
  require_positive(current_max, "current_max");
  // Monotone on [0, current_max]: the slope is a quadratic, so checking its
  // ends and its vertex is exhaustive.
  double lowest = std::min(poly_slope(*this, 0.0), poly_slope(*this, current_max));
  if (poly_c3 != 0.0) {
    double vertex = -poly_c2 / (3.0 * poly_c3);
    if (vertex > 0.0 && vertex < current_max) {
      lowest = std::min(lowest, poly_slope(*this, vertex));
    }
  }
  if (!(lowest > 0.0)) {
    throw std::invalid_argument(
        "MR torque polynomial must be strictly increasing on [0, current_max]");
  }
}

std::string_view to_string(FrictionMode mode) {
  switch (mode) {
    case FrictionMode::kSmoothTanh: return "smooth_tanh";
    case FrictionMode::kStickSlipSign: return "stick_slip_sign";
    case FrictionMode::kOff: return "off";
  }
  return "off";
}

FrictionMode friction_mode_from_string(std::string_view name) {
  if (name == "smooth_tanh") return FrictionMode::kSmoothTanh;
  if (name == "stick_slip_sign") return FrictionMode::kStickSlipSign;
  if (name == "off") return FrictionMode::kOff;
  throw std::invalid_argument("unknown friction mode '" + std::string(name) + "'");
}

void FrictionParams::validate() const {
  if (!(mu >= 0.0 && mu < 1.0)) throw std::invalid_argument("mu must lie in [0, 1)");
  require_positive(steepness, "friction steepness");
}

void GeometryParams::validate() const {
  require_positive(area_master, "area_master");
  require_positive(area_slave, "area_slave");
  require_positive(r_pulley, "r_pulley");
  require_positive(screw_lead, "screw_lead");
  require_positive(ratio_R, "ratio_R");
  if (!(p_dc >= 0.0)) throw std::invalid_argument("p_dc must be >= 0");
}

void PlantParams::validate() const {
  transmission.validate();
  clutch.validate();
  friction.validate();
  geometry.validate();
}

double mr_torque_from_current(const MRClutchParams& clutch, double current) {
  if (!(current >= 0.0 && current <= clutch.current_max)) {
    throw std::domain_error("MR current " + std::to_string(current) +
                            " A outside [0, current_max]");
  }
  return std::clamp(poly(clutch, current), 0.0, clutch.torque_max);
}

CurrentCommand current_from_torque(const MRClutchParams& clutch, double torque) {
  const double t_low = mr_torque_from_current(clutch, 0.0);
  const double t_high = mr_torque_from_current(clutch, clutch.current_max);
  if (torque <= t_low) return {0.0, torque < t_low};
  if (torque >= t_high) return {clutch.current_max, torque > t_high};

  // Bracketed Newton on the monotone branch.
  double lo = 0.0;
  double hi = clutch.current_max;
  double i = clutch.current_max * (torque - t_low) / (t_high - t_low);
  for (int iter = 0; iter < 100; ++iter) {
    const double r = poly(clutch, i) - torque;
    if (std::abs(r) < 1e-14) break;
    if (r > 0.0) hi = i; else lo = i;
    double next = i - r / poly_slope(clutch, i);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - i) < 1e-15) { i = next; break; }
    i = next;
  }
  return {i, false};
}

double friction_pressure(double p_master, double v1, const FrictionParams& friction) {
  if (!(p_master >= 0.0)) {
    throw std::domain_error("friction_pressure requires p_master >= 0");
  }
  switch (friction.mode) {
    case FrictionMode::kSmoothTanh:
      return friction.mu * p_master * std::tanh(friction.steepness * v1);
    case FrictionMode::kStickSlipSign: {
      const double s = (v1 > 0.0) ? 1.0 : (v1 < 0.0 ? -1.0 : 0.0);
      return friction.mu * p_master * s;
    }
    case FrictionMode::kOff:
      return 0.0;
  }
  return 0.0;
}

PressureCommand torque_to_pressure(const GeometryParams& geometry, double joint_torque) {
  const double p = joint_torque / geometry.torque_per_pressure() + geometry.p_dc;
  if (p < 0.0) return {0.0, false};
  return {p, true};
}

double pressure_to_torque(const GeometryParams& geometry, double pressure) {
  return (pressure - geometry.p_dc) * geometry.torque_per_pressure();
}

double pressure_to_force(const GeometryParams& geometry, double pressure) {
  return pressure * geometry.area_slave;
}

double force_to_pressure(const GeometryParams& geometry, double force) {
  return force / geometry.area_slave;
}

CurrentCommand pressure_to_current(const PlantParams& params, double pressure) {
  const double force = pressure_to_force(params.geometry, pressure);
  const double torque = force / params.geometry.force_per_clutch_torque();
  CurrentCommand cmd = current_from_torque(params.clutch, std::max(torque, 0.0));
  cmd.saturated = cmd.saturated || torque < 0.0;
  return cmd;
}

double current_to_force(const PlantParams& params, double current) {
  const double c = std::clamp(current, 0.0, params.clutch.current_max);
  const double force = mr_torque_from_current(params.clutch, c) *
                       params.geometry.force_per_clutch_torque();
  return std::clamp(force, 0.0, params.max_clutch_force());
}

DelayLine::DelayLine(std::size_t length, double fill) : buffer_(length, fill) {}

double DelayLine::push(double value) {
  if (buffer_.empty()) return value;
  const double out = buffer_[head_];
  buffer_[head_] = value;
  head_ = (head_ + 1) % buffer_.size();
  return out;
}

void DelayLine::fill(double value) {
  std::fill(buffer_.begin(), buffer_.end(), value);
  head_ = 0;
}

PlantModel::PlantModel(PlantParams params) : params_(std::move(params)) {
  params_.validate();
}

double PlantModel::master_pressure(const StateVector& x) const {
  const auto& t = params_.transmission;
  return t.k1 * (x[idx::kX1] - x[idx::kX2]) / params_.geometry.area_master;
}

double PlantModel::slave_pressure(const StateVector& x) const {
  const auto& t = params_.transmission;
  return t.k2 * (x[idx::kX2] - x[idx::kX3]) / params_.geometry.area_slave;
}

double PlantModel::friction_force(const StateVector& x) const {
  if (params_.friction.mode == FrictionMode::kOff) return 0.0;
  const double p_master = std::max(master_pressure(x), 0.0);
  return -friction_pressure(p_master, x[idx::kV1], params_.friction) *
         params_.geometry.area_master;
}

StateVector PlantModel::derivative(const StateVector& x, double f_mr_steady_cmd,
                                   const std::optional<PrescribedMotion>& motion) const {
  if (!x.allFinite() || !std::isfinite(f_mr_steady_cmd)) {
    throw NumericError("non-finite plant state or command");
  }
  const auto& t = params_.transmission;
  const double x1 = x[idx::kX1], v1 = x[idx::kV1];
  const double x2 = x[idx::kX2], v2 = x[idx::kV2];
  const double x3 = x[idx::kX3], v3 = x[idx::kV3];
  const double f_mr = x[idx::kFmr];

  StateVector dx;
  dx[idx::kX1] = v1;
  dx[idx::kV1] = (-t.k1 * x1 - t.b1 * v1 + t.k1 * x2 + f_mr + friction_force(x)) / t.m1;
  dx[idx::kX2] = v2;
  dx[idx::kV2] = (t.k1 * x1 - (t.k1 + t.k2) * x2 - t.b2 * v2 + t.k2 * x3) / t.m2;
  if (motion) {
    dx[idx::kX3] = motion->v3;
    dx[idx::kV3] = motion->a3;
  } else {
    dx[idx::kX3] = v3;
    dx[idx::kV3] = (t.k2 * x2 - (t.k2 + t.k3) * x3 - t.b3 * v3) / t.m3;
  }
  dx[idx::kFmr] = params_.clutch.omega_c * (f_mr_steady_cmd - f_mr);
  return dx;
}

StateVector PlantModel::equilibrium(double f_mr) const {
  const auto& t = params_.transmission;
  StateVector x = StateVector::Zero();
  x[idx::kX3] = f_mr / t.k3;
  x[idx::kX2] = x[idx::kX3] + f_mr / t.k2;
  x[idx::kX1] = x[idx::kX2] + f_mr / t.k1;
  x[idx::kFmr] = f_mr;
  return x;
}

double PlantModel::mechanical_energy(const StateVector& x) const {
  const auto& t = params_.transmission;
  const double d12 = x[idx::kX1] - x[idx::kX2];
  const double d23 = x[idx::kX2] - x[idx::kX3];
  const double x3 = x[idx::kX3];
  return 0.5 * (t.m1 * x[idx::kV1] * x[idx::kV1] + t.m2 * x[idx::kV2] * x[idx::kV2] +
                t.m3 * x[idx::kV3] * x[idx::kV3]) +
         0.5 * (t.k1 * d12 * d12 + t.k2 * d23 * d23 + t.k3 * x3 * x3);
}

StateVector rk4_step(const PlantModel& plant, const StateVector& x, double f_mr_cmd,
                     double dt, const std::optional<PrescribedMotion>& start,
                     const std::optional<PrescribedMotion>& mid,
                     const std::optional<PrescribedMotion>& end) {
  const StateVector k1 = plant.derivative(x, f_mr_cmd, start);
  const StateVector k2 = plant.derivative(x + 0.5 * dt * k1, f_mr_cmd, mid);
  const StateVector k3 = plant.derivative(x + 0.5 * dt * k2, f_mr_cmd, mid);
  const StateVector k4 = plant.derivative(x + dt * k3, f_mr_cmd, end);
  StateVector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (end) {
    next[idx::kX3] = end->x3;
    next[idx::kV3] = end->v3;
  }
  if (!next.allFinite()) throw NumericError("plant integration diverged");
  return next;
}

}  // namespace mrhydro

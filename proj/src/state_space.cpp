#include "mrhydro/state_space.hpp"

namespace mrhydro {

StateSpace build_state_space(const PlantParams& params) {
  params.validate();
  const auto& t = params.transmission;
  const double wc = params.clutch.omega_c;
  const double k12 = t.k1 + t.k2;
  const double k23 = t.k2 + t.k3;

  StateSpace ss;
  ss.A.setZero();
  ss.A(0, 1) = 1.0;
  ss.A.row(1) << -t.k1, -t.b1, t.k1, 0, 0, 0, 1;
  ss.A.row(1) /= t.m1;
  ss.A(2, 3) = 1.0;
  ss.A.row(3) << t.k1, 0, -k12, -t.b2, t.k2, 0, 0;
  ss.A.row(3) /= t.m2;
  ss.A(4, 5) = 1.0;
  ss.A.row(5) << 0, 0, t.k2, 0, -k23, -t.b3, 0;
  ss.A.row(5) /= t.m3;
  ss.A(6, 6) = -wc;

  ss.B.setZero();
  ss.B(6) = wc;

  const double am = params.geometry.area_master;
  const double as = params.geometry.area_slave;
  ss.C.setZero();
  ss.C(0, idx::kX1) = 1.0;
  ss.C(1, idx::kV1) = 1.0;
  ss.C(2, idx::kX3) = 1.0;
  ss.C(3, idx::kX1) = t.k1 / am;
  ss.C(3, idx::kX2) = -t.k1 / am;
  ss.C_master = ss.C.row(3);

  ss.C_d.setZero();
  ss.C_d(idx::kX2) = t.k2 / as;
  ss.C_d(idx::kX3) = -t.k2 / as;
  return ss;
}

}  // namespace mrhydro

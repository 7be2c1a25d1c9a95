#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mrhydro/plant.hpp"
#include "mrhydro/state_space.hpp"

using namespace mrhydro;

namespace {

double poly(double i) { return -0.015 * i * i * i + 0.104 * i * i + 0.225 * i + 0.044; }

PlantParams frictionless_no_delay() {
  PlantParams p;
  p.friction.mode = FrictionMode::kOff;
  p.clutch.tau_delay = 0.0;
  return p;
}

}  // namespace

TEST(ClutchStatics, PolynomialValues) {
  const MRClutchParams c;
  EXPECT_NEAR(mr_torque_from_current(c, 0.0), 0.044, 1e-12);
  EXPECT_NEAR(mr_torque_from_current(c, 1.0), 0.358, 1e-12);
  EXPECT_NEAR(mr_torque_from_current(c, 2.5), poly(2.5), 1e-12);
  EXPECT_NEAR(mr_torque_from_current(c, 2.5), 1.022125, 1e-12);
  EXPECT_THROW(mr_torque_from_current(c, -0.1), std::domain_error);
  EXPECT_THROW(mr_torque_from_current(c, 3.1), std::domain_error);
}

TEST(ClutchStatics, MonotoneAndInverseRoundTrip) {
  const MRClutchParams c;
  double prev = -1.0;
  for (int k = 0; k <= 1000; ++k) {
    const double i = 3.0 * k / 1000.0;
    const double t = mr_torque_from_current(c, i);
    EXPECT_GT(t, prev);
    prev = t;
    const CurrentCommand back = current_from_torque(c, t);
    EXPECT_NEAR(mr_torque_from_current(c, back.current), t, 1e-6);
  }
  EXPECT_NEAR(current_from_torque(c, 0.044).current, 0.0, 1e-9);
  EXPECT_NEAR(current_from_torque(c, poly(2.5)).current, 2.5, 1e-6);
}

TEST(ClutchStatics, OverRangeTorqueSaturates) {
  const MRClutchParams c;
  const CurrentCommand cmd = current_from_torque(c, 2.5);
  EXPECT_TRUE(cmd.saturated);
  EXPECT_DOUBLE_EQ(cmd.current, c.current_max);
}

TEST(Friction, ModesAndLimits) {
  FrictionParams f;
  EXPECT_DOUBLE_EQ(friction_pressure(1e6, 0.0, f), 0.0);
  EXPECT_NEAR(friction_pressure(1e6, 10.0, f), 1.4e5, 1e-6);
  EXPECT_NEAR(friction_pressure(1e6, -10.0, f), -1.4e5, 1e-6);
  EXPECT_NEAR(friction_pressure(1e6, 1e-3, f), 0.14e6 * std::tanh(1.0), 1e-6);
  f.mode = FrictionMode::kStickSlipSign;
  EXPECT_DOUBLE_EQ(friction_pressure(1e6, 1e-9, f), 1.4e5);
  EXPECT_DOUBLE_EQ(friction_pressure(1e6, 0.0, f), 0.0);
  f.mode = FrictionMode::kOff;
  EXPECT_DOUBLE_EQ(friction_pressure(1e6, 1.0, f), 0.0);
}

TEST(Friction, IsOddInSpeed) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> p(0.0, 3e6), v(-0.05, 0.05);
  for (FrictionMode mode : {FrictionMode::kSmoothTanh, FrictionMode::kStickSlipSign, FrictionMode::kOff}) {
    FrictionParams f;
    f.mode = mode;
    for (int k = 0; k < 200; ++k) {
      const double pm = p(rng), s = v(rng);
      EXPECT_DOUBLE_EQ(friction_pressure(pm, -s, f), -friction_pressure(pm, s, f));
    }
  }
}

TEST(Conversions, TorquePressure) {
  const GeometryParams g;
  EXPECT_DOUBLE_EQ(torque_to_pressure(g, 0.0).pressure, 205e3);
  EXPECT_NEAR(torque_to_pressure(g, 29.0).pressure, 2.31e6 + 205e3, 0.01 * 2.31e6);
  const double mid = torque_to_pressure(g, 14.5).pressure;
  EXPECT_NEAR(mid, 0.5 * (torque_to_pressure(g, 0.0).pressure + torque_to_pressure(g, 29.0).pressure), 1e-6);
  EXPECT_NEAR(pressure_to_torque(g, torque_to_pressure(g, 7.3).pressure), 7.3, 1e-12);
  EXPECT_NEAR(g.area_slave * g.r_pulley, 29.0 / 2.31e6, 0.01 * 29.0 / 2.31e6);
  const PressureCommand neg = torque_to_pressure(g, -10.0);
  EXPECT_FALSE(neg.feasible);
}

TEST(Conversions, PressureCurrentChainRoundTrip) {
  const PlantParams p;
  for (double pressure : {3e5, 6e5, 1.0e6, 1.3e6}) {
    const CurrentCommand c = pressure_to_current(p, pressure);
    ASSERT_FALSE(c.saturated);
    EXPECT_NEAR(force_to_pressure(p.geometry, current_to_force(p, c.current)), pressure,
                1e-6 * pressure);
  }
}

TEST(DelayLine, DelaysByItsLength) {
  DelayLine d(3, 0.5);
  EXPECT_EQ(d.length(), 3u);
  EXPECT_DOUBLE_EQ(d.push(1.0), 0.5);
  EXPECT_DOUBLE_EQ(d.push(2.0), 0.5);
  EXPECT_DOUBLE_EQ(d.push(3.0), 0.5);
  EXPECT_DOUBLE_EQ(d.push(4.0), 1.0);
  EXPECT_DOUBLE_EQ(d.push(5.0), 2.0);
}

TEST(StateSpaceModel, StructureOfAandB) {
  const PlantParams p;
  const StateSpace ss = build_state_space(p);
  Eigen::Matrix<double, 1, 7> row1;
  row1 << 0, 1, 0, 0, 0, 0, 0;
  EXPECT_EQ(ss.A.row(0), row1);
  EXPECT_DOUBLE_EQ(ss.A(6, 6), -p.clutch.omega_c);
  EXPECT_DOUBLE_EQ(ss.B(6), p.clutch.omega_c);
  const auto& t = p.transmission;
  EXPECT_DOUBLE_EQ(ss.A(3, 2), -(t.k1 + t.k2) / t.m2);
  EXPECT_DOUBLE_EQ(ss.A(5, 4), -(t.k2 + t.k3) / t.m3);
  EXPECT_DOUBLE_EQ(ss.C_d(2), t.k2 / p.geometry.area_slave);
  EXPECT_DOUBLE_EQ(ss.C_d(4), -t.k2 / p.geometry.area_slave);
  EXPECT_EQ(ss.C.row(3), ss.C_master);
}

TEST(StateSpaceModel, MatchesFiniteDifferenceJacobian) {
  const PlantParams p = frictionless_no_delay();
  const PlantModel plant(p);
  const StateSpace ss = build_state_space(p);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    StateVector x;
    for (int i = 0; i < 7; ++i) x[i] = g(rng) * (i == 6 ? 100.0 : 1e-3);
    const double u = 300.0 + 50.0 * g(rng);
    const StateVector lin = ss.A * x + ss.B * u;
    const StateVector non = plant.derivative(x, u);
    EXPECT_LE((lin - non).norm(), 1e-12 * lin.norm());
    // Central differences column by column.
    for (int j = 0; j < 7; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      StateVector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const StateVector col = (plant.derivative(xp, u) - plant.derivative(xm, u)) / (2 * h);
      EXPECT_LE((col - ss.A.col(j)).norm(), 1e-6 * std::max(1.0, ss.A.col(j).norm()));
    }
  }
}

TEST(StateSpaceModel, UndampedModesMatchMassSpringEigenproblem) {
  PlantParams p = frictionless_no_delay();
  p.transmission.b1 = p.transmission.b2 = p.transmission.b3 = 1e-12;
  const StateSpace ss = build_state_space(p);
  const Eigen::Matrix<double, 6, 6> Am = ss.A.topLeftCorner<6, 6>();
  Eigen::VectorXd from_a = Am.eigenvalues().imag().cwiseAbs();
  std::sort(from_a.data(), from_a.data() + from_a.size());

  // Generalized symmetric problem K v = w^2 M v on the three masses.
  const auto& t = p.transmission;
  Eigen::Matrix3d K, M = Eigen::Vector3d(t.m1, t.m2, t.m3).asDiagonal();
  K << t.k1, -t.k1, 0, -t.k1, t.k1 + t.k2, -t.k2, 0, -t.k2, t.k2 + t.k3;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> es(K, M);
  for (int i = 0; i < 3; ++i) {
    const double w = std::sqrt(es.eigenvalues()[i]);
    EXPECT_NEAR(from_a[2 * i], w, 1e-6 * w);
    EXPECT_NEAR(from_a[2 * i + 1], w, 1e-6 * w);
  }
}

TEST(PlantModel, ZeroStateZeroCommandIsEquilibrium) {
  const PlantModel plant{PlantParams{}};
  EXPECT_EQ(plant.derivative(StateVector::Zero(), 0.0), StateVector::Zero());
}

TEST(PlantModel, StaticBalanceGivesForceOverArea) {
  const PlantParams p;
  const PlantModel plant(p);
  for (double f : {0.0, 200.0, 800.0}) {
    const StateVector x = plant.equilibrium(f);
    EXPECT_LE(plant.derivative(x, f).norm(), 1e-9 * std::max(1.0, f));
    EXPECT_NEAR(plant.slave_pressure(x), f / p.geometry.area_slave, 1e-9 * std::max(1.0, f));
    EXPECT_NEAR(plant.master_pressure(x), f / p.geometry.area_master, 1e-9 * std::max(1.0, f));
  }
}

TEST(PlantModel, StiffBaseSettlesToForceOverArea) {
  PlantParams p = frictionless_no_delay();
  p.transmission.k3 = 1e10;
  const PlantModel plant(p);
  StateVector x = StateVector::Zero();
  const double f = 500.0;
  for (int k = 0; k < 40000; ++k) x = rk4_step(plant, x, f, 1e-5);
  EXPECT_NEAR(plant.slave_pressure(x), f / p.geometry.area_slave, 1e-4 * f / p.geometry.area_slave);
}

TEST(PlantModel, MechanicalEnergyNeverIncreasesUnforced) {
  const PlantParams p = frictionless_no_delay();
  const PlantModel plant(p);
  StateVector x;
  x << 1e-3, 0.05, -5e-4, 0.0, 2e-4, -0.01, 0.0;
  double e = plant.mechanical_energy(x);
  for (int k = 0; k < 20000; ++k) {
    x = rk4_step(plant, x, 0.0, 1e-5);
    const double en = plant.mechanical_energy(x);
    ASSERT_LE(en, e * (1.0 + 1e-12));
    e = en;
  }
}

TEST(PlantModel, NonlinearMatchesLinearWithoutFrictionOrDelay) {
  const PlantParams p = frictionless_no_delay();
  const PlantModel plant(p);
  const StateSpace ss = build_state_space(p);
  // Fine RK4 on both vector fields from the same start under the same input.
  StateVector xn = StateVector::Zero(), xl = StateVector::Zero();
  const double h = 1e-4;
  double worst = 0.0, scale = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double u = 400.0 + 100.0 * std::sin(2.0 * 3.14159 * 7.0 * k * h);
    xn = rk4_step(plant, xn, u, h);
    auto f = [&](const StateVector& s) -> StateVector { return ss.A * s + ss.B * u; };
    const StateVector k1 = f(xl), k2 = f(xl + 0.5 * h * k1), k3 = f(xl + 0.5 * h * k2),
                      k4 = f(xl + h * k3);
    xl += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    worst = std::max(worst, (xn - xl).cwiseAbs().maxCoeff());
    scale = std::max(scale, xl.cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-9 * scale);
}

TEST(PlantModel, PrescribedMotionOverridesJointRows) {
  const PlantModel plant{PlantParams{}};
  StateVector x = StateVector::Zero();
  const PrescribedMotion m{1e-3, 0.02, -0.5};
  const StateVector d = plant.derivative(x, 0.0, m);
  EXPECT_DOUBLE_EQ(d[idx::kX3], 0.02);
  EXPECT_DOUBLE_EQ(d[idx::kV3], -0.5);
}

TEST(PlantModel, NonFiniteStateThrows) {
  const PlantModel plant{PlantParams{}};
  StateVector x = StateVector::Zero();
  x[0] = std::nan("");
  EXPECT_THROW(plant.derivative(x, 0.0), NumericError);
}

#pragma once

#include <Eigen/Core>

#include "mrhydro/params.hpp"
#include "mrhydro/plant.hpp"

namespace mrhydro {

inline constexpr int kNumMeasurements = 4;

// Linear design model: friction and MR pure delay omitted.
//   x = [x1 v1 x2 v2 x3 v3 f_mr],  u = steady MR force
//   y = [x1 v1 x3 P_M]             (sensors)
//   y_d = P_s                      (tracked output)
struct StateSpace {
  Eigen::Matrix<double, kNumStates, kNumStates> A;
  Eigen::Matrix<double, kNumStates, 1> B;
  Eigen::Matrix<double, kNumMeasurements, kNumStates> C;
  Eigen::Matrix<double, 1, kNumStates> C_d;
  // Master pressure row, same as the last row of C.
  Eigen::Matrix<double, 1, kNumStates> C_master;
};

StateSpace build_state_space(const PlantParams& params);

}  // namespace mrhydro

#pragma once

#include <Eigen/Core>

namespace mrhydro {

struct DiscreteSystem {
  Eigen::MatrixXd Ad;
  Eigen::MatrixXd Bd;
};

// Zero-order-hold discretization: [Ad Bd; 0 I] = exp([A B; 0 0] dt).
DiscreteSystem discretize_zoh(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt);

}  // namespace mrhydro

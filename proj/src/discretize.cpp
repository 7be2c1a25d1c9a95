#include "mrhydro/discretize.hpp"

#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace mrhydro {

DiscreteSystem discretize_zoh(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize_zoh: dt must be > 0");
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = A * dt;
  M.topRightCorner(n, m) = B * dt;
  const Eigen::MatrixXd phi = M.exp();
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, m)};
}

}  // namespace mrhydro

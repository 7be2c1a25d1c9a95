#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace mrhydro {

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CareSolution {
  Eigen::MatrixXd P;
  double relative_residual = 0.0;  // ||A'P + PA - PBR^-1B'P + Q||_F / ||P||_F
  double symmetry_error = 0.0;     // ||P - P'||_F / ||P||_F
  int newton_iterations = 0;
};

// Stabilizing solution of A'P + PA - P B R^-1 B' P + Q = 0.
//
// The Hamiltonian is symplectically balanced, reduced to complex Schur form,
// reordered so the stable invariant subspace leads, and the resulting P is
// polished with Newton-Kleinman steps. The returned residual is measured in the
// caller's coordinates; anything above 1e-8 raises SynthesisError, as do an
// indefinite R and a Hamiltonian with spectrum on the imaginary axis
// (non-stabilizable or non-detectable data).
CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

double care_relative_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                              const Eigen::MatrixXd& P);

// Solves Ac' X + X Ac + M = 0 (Bartels-Stewart on the complex Schur form).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Ac, const Eigen::MatrixXd& M);

double max_real_eigenvalue(const Eigen::MatrixXd& M);
inline bool is_hurwitz(const Eigen::MatrixXd& M) { return max_real_eigenvalue(M) < 0.0; }

}  // namespace mrhydro

#include "mrhydro/care.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace mrhydro {

namespace {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

// Swaps the adjacent diagonal entries k, k+1 of an upper-triangular T and
// accumulates the unitary rotation into Q (LAPACK ztrexc, one step).
void swap_schur_pair(ComplexMatrix& T, ComplexMatrix& Q, Eigen::Index k) {
  const Eigen::Index n = T.rows();
  const Complex t11 = T(k, k);
  const Complex t22 = T(k + 1, k + 1);
  const Complex f = T(k, k + 1);
  const Complex g = t22 - t11;

  double cs;
  Complex sn;
  if (std::abs(g) == 0.0) return;
  if (std::abs(f) == 0.0) {
    cs = 0.0;
    sn = std::conj(g) / std::abs(g);
  } else {
    const double nrm = std::hypot(std::abs(f), std::abs(g));
    cs = std::abs(f) / nrm;
    sn = (f / std::abs(f)) * std::conj(g) / nrm;
  }
  // Rotation acting on a pair (x, y): x' = c x + s y, y' = c y - conj(s) x.
  auto rot = [](Complex& x, Complex& y, double c, Complex s) {
    const Complex xn = c * x + s * y;
    y = c * y - std::conj(s) * x;
    x = xn;
  };
  for (Eigen::Index j = k + 2; j < n; ++j) rot(T(k, j), T(k + 1, j), cs, sn);
  for (Eigen::Index i = 0; i < k; ++i) rot(T(i, k), T(i, k + 1), cs, std::conj(sn));
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
  T(k + 1, k) = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) rot(Q(i, k), Q(i, k + 1), cs, std::conj(sn));
}

// Symplectic diagonal scaling D (powers of two) so that the Hamiltonian built
// from D^-1 A D, D^-1 G D^-1 and D Q D has comparable row and column norms.
Eigen::VectorXd balance_hamiltonian(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G,
                                    const Eigen::MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  for (int sweep = 0; sweep < 40; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      double shrinks = 0.0;  // entries scaled by 1/d_i
      double grows = 0.0;    // entries scaled by d_i
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) {
          shrinks += std::abs(A(i, j)) * d(j) / d(i);
          grows += std::abs(A(j, i)) * d(i) / d(j);
        }
        shrinks += std::abs(G(i, j)) / (d(i) * d(j));
        grows += std::abs(Q(i, j)) * d(i) * d(j);
      }
      if (shrinks == 0.0 || grows == 0.0) continue;
      const double target = std::sqrt(shrinks / grows);
      const double f = std::exp2(std::round(std::log2(target) * 0.5));
      if (f != 1.0) {
        d(i) *= f;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return d;
}

}  // namespace

double max_real_eigenvalue(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  if (es.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  return es.eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Ac, const Eigen::MatrixXd& M) {
  const Eigen::Index n = Ac.rows();
  Eigen::ComplexSchur<Eigen::MatrixXd> schur(Ac);
  if (schur.info() != Eigen::Success) throw SynthesisError("Schur decomposition failed");
  const ComplexMatrix& T = schur.matrixT();
  const ComplexMatrix& U = schur.matrixU();
  const ComplexMatrix F = U.adjoint() * M.cast<Complex>() * U;
  const ComplexMatrix Th = T.adjoint();  // lower triangular

  ComplexMatrix Y = ComplexMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = -F.col(j);
    for (Eigen::Index k = 0; k < j; ++k) rhs -= T(k, j) * Y.col(k);
    ComplexMatrix lhs = Th;
    lhs.diagonal().array() += T(j, j);
    Y.col(j) = lhs.triangularView<Eigen::Lower>().solve(rhs);
  }
  Eigen::MatrixXd X = (U * Y * U.adjoint()).real();
  return 0.5 * (X + X.transpose());
}

double care_relative_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                              const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd PB = P * B;
  const Eigen::MatrixXd res =
      A.transpose() * P + P * A - PB * R.ldlt().solve(PB.transpose()) + Q;
  const double pn = P.norm();
  const double rn = res.norm();
  if (rn == 0.0) return 0.0;
  return rn / std::max(pn, std::numeric_limits<double>::min());
}

CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m) {
    throw SynthesisError("solve_care: inconsistent matrix dimensions");
  }
  if (!A.allFinite() || !B.allFinite() || !Q.allFinite() || !R.allFinite()) {
    throw SynthesisError("solve_care: non-finite input");
  }
  if ((R - R.transpose()).norm() > 1e-12 * std::max(1.0, R.norm())) {
    throw SynthesisError("solve_care: R is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success) {
    throw SynthesisError("solve_care: R is not positive definite");
  }
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm())) {
    throw SynthesisError("solve_care: Q is not symmetric");
  }

  // G = B R^-1 B' through the Cholesky factor keeps badly scaled R usable.
  const Eigen::MatrixXd Bw = llt.matrixL().solve(B.transpose()).transpose();
  const Eigen::MatrixXd G = Bw * Bw.transpose();

  const Eigen::VectorXd d = balance_hamiltonian(A, G, Q);
  const Eigen::VectorXd dinv = d.cwiseInverse();
  const Eigen::MatrixXd As = dinv.asDiagonal() * A * d.asDiagonal();
  const Eigen::MatrixXd Gs = dinv.asDiagonal() * G * dinv.asDiagonal();
  const Eigen::MatrixXd Qs = d.asDiagonal() * Q * d.asDiagonal();
  const Eigen::MatrixXd Bws = dinv.asDiagonal() * Bw;

  Eigen::MatrixXd H(2 * n, 2 * n);
  H << As, -Gs, -Qs, -As.transpose();

  Eigen::ComplexSchur<Eigen::MatrixXd> schur(H);
  if (schur.info() != Eigen::Success) {
    throw SynthesisError("solve_care: Hamiltonian Schur decomposition failed");
  }
  ComplexMatrix T = schur.matrixT();
  ComplexMatrix U = schur.matrixU();

  const double axis_tol = 1e-10 * std::max(1.0, H.norm());
  Eigen::Index stable = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const double re = T(i, i).real();
    if (std::abs(re) <= axis_tol) {
      throw SynthesisError(
          "solve_care: Hamiltonian has eigenvalues on the imaginary axis; "
          "(A, B) not stabilizable or (A, Q) not detectable");
    }
    if (re < 0.0) ++stable;
  }
  if (stable != n) {
    throw SynthesisError("solve_care: Hamiltonian spectrum is not split n/n");
  }

  // Move the stable eigenvalues to the leading block.
  Eigen::Index placed = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (T(i, i).real() < 0.0) {
      for (Eigen::Index k = i; k > placed; --k) swap_schur_pair(T, U, k - 1);
      ++placed;
    }
  }

  const ComplexMatrix U11 = U.topLeftCorner(n, n);
  const ComplexMatrix U21 = U.bottomLeftCorner(n, n);
  // U11 has orthonormal-ish columns; a tiny singular value means no graph.
  const Eigen::JacobiSVD<ComplexMatrix> svd(U11);
  if (svd.singularValues()(n - 1) < 1e-12) {
    throw SynthesisError("solve_care: stable subspace is not a graph; no stabilizing solution");
  }
  Eigen::PartialPivLU<ComplexMatrix> lu(U11.transpose());
  Eigen::MatrixXd Ps = lu.solve(U21.transpose()).transpose().real();
  Ps = 0.5 * (Ps + Ps.transpose());

  // Newton-Kleinman refinement in balanced coordinates.
  auto scaled_residual = [&](const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd PB = P * Bws;
    const Eigen::MatrixXd res =
        As.transpose() * P + P * As - PB * PB.transpose() + Qs;
    return res.norm() / std::max(P.norm(), std::numeric_limits<double>::min());
  };
  CareSolution out;
  double best = scaled_residual(Ps);
  for (int iter = 0; iter < 30 && best > 1e-15; ++iter) {
    const Eigen::MatrixXd Kw = Bws.transpose() * Ps;  // whitened gain
    const Eigen::MatrixXd Ac = As - Bws * Kw;
    if (!is_hurwitz(Ac)) break;
    Eigen::MatrixXd next = solve_lyapunov(Ac, Qs + Kw.transpose() * Kw);
    const double r = scaled_residual(next);
    if (!(r < best)) break;
    best = r;
    Ps = std::move(next);
    ++out.newton_iterations;
  }

  out.P = dinv.asDiagonal() * Ps * dinv.asDiagonal();
  out.P = 0.5 * (out.P + out.P.transpose());
  const double pn = std::max(out.P.norm(), std::numeric_limits<double>::min());
  out.symmetry_error = (out.P - out.P.transpose()).norm() / pn;
  out.relative_residual = care_relative_residual(A, B, Q, R, out.P);
  if (!(out.relative_residual <= 1e-8)) {
    throw SynthesisError("solve_care: residual certificate failed (" +
                         std::to_string(out.relative_residual) + ")");
  }
  const Eigen::MatrixXd K = R.ldlt().solve(B.transpose() * out.P);
  if (!is_hurwitz(A - B * K)) {
    throw SynthesisError("solve_care: solution is not stabilizing");
  }
  return out;
}

}  // namespace mrhydro

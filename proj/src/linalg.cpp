// SPDX-License-Identifier: Apache-2.0

#include "riscap/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace riscap {

double hermiticity_defect(const MatC& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

VecD psd_eigenvalues(const MatC& a) {
  if (a.rows() != a.cols()) throw numerical_error("psd_eigenvalues: matrix not square");
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale > 0.0 && hermiticity_defect(a) > 1e-10 * scale)
    throw numerical_error("psd_eigenvalues: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatC> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("psd_eigenvalues: eigensolver failed");
  VecD ev = es.eigenvalues();
  const double lmax = ev.size() ? std::max(ev.maxCoeff(), 0.0) : 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10 * lmax)
      throw numerical_error("psd_eigenvalues: significantly indefinite input");
    if (ev[i] < 0.0) ev[i] = 0.0;
  }
  return ev;
}

MatC matrix_sqrt_hermitian(const MatC& a) {
  if (a.rows() != a.cols()) throw numerical_error("matrix_sqrt_hermitian: matrix not square");
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return MatC::Zero(a.rows(), a.cols());
  if (hermiticity_defect(a) > 1e-10 * scale)
    throw numerical_error("matrix_sqrt_hermitian: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatC> es(a);
  if (es.info() != Eigen::Success)
    throw numerical_error("matrix_sqrt_hermitian: eigensolver failed");
  VecD ev = es.eigenvalues();
  const double lmax = std::max(ev.maxCoeff(), 0.0);
  // Eigenvalues at roundoff level are exact zeros of the input; keeping them
  // would inject sqrt(eps)-sized noise into the root.
  const double floor = 128.0 * std::numeric_limits<double>::epsilon() * lmax;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10 * lmax)
      throw numerical_error("matrix_sqrt_hermitian: significantly indefinite input");
    ev[i] = (ev[i] <= floor) ? 0.0 : std::sqrt(ev[i]);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double logdet_identity_plus_hermitian(const MatC& a) {
  MatC m = a;
  m += MatC::Identity(a.rows(), a.cols());
  Eigen::LLT<MatC> llt(m);
  if (llt.info() != Eigen::Success)
    throw numerical_error("logdet: I + A is not positive definite");
  double ld = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) ld += std::log(l(i, i).real());
  return 2.0 * ld;
}

std::pair<double, int> logabsdet_real(const MatD& a) {
  Eigen::PartialPivLU<MatD> lu(a);
  const MatD& u = lu.matrixLU();
  double ld = 0.0;
  int sign = (lu.permutationP().determinant() > 0) ? 1 : -1;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double d = u(i, i);
    if (d == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
    if (d < 0.0) sign = -sign;
    ld += std::log(std::abs(d));
  }
  return {ld, sign};
}

}  // namespace riscap

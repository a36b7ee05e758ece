#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>

#include "ksme/errors.hpp"

namespace ksme {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
MatrixX<Scalar> symmetrized(const MatrixX<Scalar>& m) {
  return ((m + m.transpose()) / Scalar(2)).eval();
}

template <typename Scalar>
void symmetrize_in_place(MatrixX<Scalar>& m) {
  m = symmetrized(m);
}

template <typename Scalar>
bool is_symmetric(const MatrixX<Scalar>& m, Scalar tol) {
  if (m.rows() != m.cols()) return false;
  const Scalar scale = std::max<Scalar>(Scalar(1), m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

template <typename Scalar>
Scalar min_eigenvalue(const MatrixX<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Principal (symmetric PSD) square root. Eigenvalues below zero are clamped,
/// so the result is defined for any symmetric input that is PSD up to
/// round-off.
template <typename Scalar>
MatrixX<Scalar> principal_sqrt(const MatrixX<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m);
  VectorX<Scalar> roots = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() *
         es.eigenvectors().transpose();
}

template <typename Scalar>
struct RobustLlt {
  Eigen::LLT<MatrixX<Scalar>> llt;
  Scalar applied_jitter = 0;  // absolute value added to the diagonal
};

/// Cholesky with diagonal jitter escalation: on failure, jitter starts at
/// rel_start * trace and grows by factors of 10 up to rel_max * trace.
template <typename Scalar>
RobustLlt<Scalar> robust_llt(const MatrixX<Scalar>& m, Scalar rel_start,
                             Scalar rel_max, const std::string& what) {
  RobustLlt<Scalar> out;
  out.llt.compute(m);
  if (out.llt.info() == Eigen::Success) return out;

  const Scalar trace = m.trace();
  const Scalar scale = trace > Scalar(0) ? trace : Scalar(1);
  MatrixX<Scalar> jittered = m;
  for (Scalar rel = rel_start; rel <= rel_max * Scalar(1.000001); rel *= 10) {
    const Scalar jitter = rel * scale;
    jittered = m + jitter * MatrixX<Scalar>::Identity(m.rows(), m.cols());
    out.llt.compute(jittered);
    if (out.llt.info() == Eigen::Success) {
      out.applied_jitter = jitter;
      return out;
    }
  }
  std::ostringstream msg;
  msg << what << ": " << m.rows() << "x" << m.cols()
      << " matrix is not positive definite after diagonal jitter up to "
      << rel_max << "*trace (trace=" << trace
      << ", min diagonal=" << m.diagonal().minCoeff() << ")";
  throw NumericalError(msg.str());
}

}  // namespace ksme

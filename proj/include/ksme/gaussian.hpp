#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ksme/linalg.hpp"

namespace ksme {

/// Multivariate normal density with a fixed covariance, evaluated at varying
/// (point, mean) pairs. The Cholesky factor and normalization constant are
/// cached so repeated evaluations cost one triangular solve each.
template <typename Scalar>
class GaussianDensity {
 public:
  explicit GaussianDensity(const MatrixX<Scalar>& cov,
                           const std::string& what = "gaussian covariance") {
    auto factored = robust_llt<Scalar>(cov, Scalar(1e-12), Scalar(1e-6), what);
    llt_ = std::move(factored.llt);
    const Scalar dim = static_cast<Scalar>(cov.rows());
    Scalar log_det = 0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
      log_det += Scalar(2) * std::log(llt_.matrixLLT()(i, i));
    }
    log_norm_ = Scalar(-0.5) * (dim * std::log(Scalar(2) * pi()) + log_det);
  }

  Scalar operator()(const VectorX<Scalar>& x, const VectorX<Scalar>& mean) const {
    VectorX<Scalar> r = x - mean;
    return from_residual(r);
  }

  /// Density from a precomputed residual x - mean. Overwrites the argument;
  /// lets hot loops reuse one buffer with no allocation.
  Scalar from_residual(VectorX<Scalar>& r) const {
    llt_.matrixL().solveInPlace(r);
    return std::exp(log_norm_ - Scalar(0.5) * r.squaredNorm());
  }

  const Eigen::LLT<MatrixX<Scalar>>& llt() const { return llt_; }

  static constexpr Scalar pi() { return Scalar(3.141592653589793238462643L); }

 private:
  Eigen::LLT<MatrixX<Scalar>> llt_;
  Scalar log_norm_ = 0;
};

/// Draws from N(mean, cov). The transform is the eigendecomposition-based
/// square root, so singular (PSD) covariances are handled; a zero covariance
/// reproduces the mean exactly.
template <typename Scalar>
class GaussianSampler {
 public:
  GaussianSampler(VectorX<Scalar> mean, const MatrixX<Scalar>& cov)
      : mean_(std::move(mean)), transform_(principal_sqrt(cov)) {}

  template <typename Rng>
  VectorX<Scalar> operator()(Rng& rng) const {
    VectorX<Scalar> out(mean_.size());
    VectorX<Scalar> scratch(mean_.size());
    draw_into(out, scratch, rng);
    return out;
  }

  template <typename Rng>
  void draw_into(VectorX<Scalar>& out, VectorX<Scalar>& scratch,
                 Rng& rng) const {
    std::normal_distribution<Scalar> unit(0, 1);
    for (Eigen::Index i = 0; i < scratch.size(); ++i) scratch(i) = unit(rng);
    out.noalias() = transform_ * scratch;
    out += mean_;
  }

  Eigen::Index dim() const { return mean_.size(); }

 private:
  VectorX<Scalar> mean_;
  MatrixX<Scalar> transform_;
};

}  // namespace ksme

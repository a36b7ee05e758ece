#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <sstream>
#include <utility>
#include <vector>

#include "ksme/errors.hpp"
#include "ksme/gaussian.hpp"
#include "ksme/linalg.hpp"
#include "ksme/model.hpp"

namespace ksme {

/// Width matrix of the Gaussian kernel used by the measurement-set
/// transform. Must be symmetric positive definite and match the
/// measurement dimension.
template <typename Scalar>
struct KernelConfig {
  MatrixX<Scalar> width;
};

/// Where a test vector came from: offset along +/- one principal axis of
/// the scaled kernel around one measurement.
struct TestVectorSource {
  Eigen::Index measurement = 0;
  Eigen::Index axis = 0;
  int sign = +1;
};

template <typename Scalar>
struct TestVectorSet {
  std::vector<VectorX<Scalar>> vectors;
  std::vector<TestVectorSource> sources;

  Eigen::Index count() const {
    return static_cast<Eigen::Index>(vectors.size());
  }
};

/// Closed-form joint moments of the pseudo-measurement s under the prior:
/// mean_s is E[s], cross_cov is Cov(x, s) with one column per test vector,
/// cov_ss is Cov(s, s).
template <typename Scalar>
struct PseudoMeasurementMoments {
  VectorX<Scalar> mean_s;
  MatrixX<Scalar> cross_cov;
  MatrixX<Scalar> cov_ss;
};

namespace detail {

template <typename Scalar>
void check_kernel(const KernelConfig<Scalar>& kernel, Eigen::Index meas_dim) {
  const auto& K = kernel.width;
  if (K.rows() != meas_dim || K.cols() != meas_dim) {
    std::ostringstream msg;
    msg << "kernel width is " << K.rows() << "x" << K.cols()
        << " but measurements have dimension " << meas_dim;
    throw ConfigError(msg.str());
  }
  if (!is_symmetric(K, Scalar(1e-9))) {
    throw ConfigError("kernel width matrix is not symmetric");
  }
  const Scalar scale = std::max<Scalar>(Scalar(1), K.trace());
  if (min_eigenvalue(K) <= Scalar(1e-12) * scale) {
    throw ConfigError("kernel width matrix is not positive definite");
  }
}

/// Per-target statistics of the predicted measurement mixture: predicted
/// measurement, innovation covariance, and kernel-smoothed densities at
/// full and half kernel width. Shared by the moment computation and by
/// phd_convolved_with_kernel so both produce identical values.
template <typename Scalar>
struct KernelMixture {
  std::vector<VectorX<Scalar>> predicted_meas;
  std::vector<MatrixX<Scalar>> innovation_cov;
  std::vector<GaussianDensity<Scalar>> full;
  std::vector<GaussianDensity<Scalar>> half;
};

template <typename Scalar>
KernelMixture<Scalar> predicted_kernel_mixture(
    const MultiTargetBelief<Scalar>& prior, const LinearModelBank<Scalar>& bank,
    const KernelConfig<Scalar>& kernel) {
  if (prior.targets != bank.target_count() ||
      prior.state_dim != bank.state_dim() ||
      prior.mean.size() != bank.stacked_A.rows()) {
    throw ConfigError("belief dimensions do not match model bank");
  }
  check_kernel(kernel, bank.meas_dim());

  const Eigen::Index N = bank.target_count();
  KernelMixture<Scalar> mix;
  mix.predicted_meas.reserve(static_cast<std::size_t>(N));
  mix.innovation_cov.reserve(static_cast<std::size_t>(N));
  mix.full.reserve(static_cast<std::size_t>(N));
  mix.half.reserve(static_cast<std::size_t>(N));
  for (Eigen::Index l = 0; l < N; ++l) {
    const auto& t = bank.target(l);
    mix.predicted_meas.push_back(t.H * prior.block_mean(l));
    MatrixX<Scalar> S = t.H * prior.block_cov(l, l) * t.H.transpose() + t.Cv;
    symmetrize_in_place(S);
    mix.full.emplace_back(S + kernel.width);
    mix.half.emplace_back(S + Scalar(0.5) * kernel.width);
    mix.innovation_cov.push_back(std::move(S));
  }
  return mix;
}

}  // namespace detail

/// Value of the measurement-set transform F(z) = sum_l N(z; y_l, K).
/// Terms are accumulated in lexicographic order of the measurement vectors,
/// so the result is bit-identical under any permutation of the set.
template <typename Scalar>
Scalar kernel_transform_eval(const MeasurementSet<Scalar>& measurements,
                             const KernelConfig<Scalar>& kernel,
                             const VectorX<Scalar>& z) {
  if (measurements.measurements.empty()) return Scalar(0);
  detail::check_kernel(kernel, measurements.dim());
  if (z.size() != measurements.dim()) {
    throw ConfigError("evaluation point dimension does not match measurements");
  }
  for (const auto& y : measurements.measurements) {
    if (y.size() != measurements.dim()) {
      throw ConfigError("measurement set has inconsistent dimensions");
    }
  }

  std::vector<std::size_t> order(measurements.measurements.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ya = measurements.measurements[a];
    const auto& yb = measurements.measurements[b];
    return std::lexicographical_compare(ya.data(), ya.data() + ya.size(),
                                        yb.data(), yb.data() + yb.size());
  });

  GaussianDensity<Scalar> dens(kernel.width);
  Scalar acc(0);
  for (std::size_t idx : order) {
    acc += dens(z, measurements.measurements[idx]);
  }
  return acc;
}

/// Places 2 * meas_dim test vectors around every measurement: +/- each
/// column of the principal square root of (meas_dim * K). Vector order is
/// measurement-major, axis-minor, + before -.
template <typename Scalar>
TestVectorSet<Scalar> select_test_vectors(
    const MeasurementSet<Scalar>& measurements,
    const KernelConfig<Scalar>& kernel) {
  TestVectorSet<Scalar> out;
  if (measurements.measurements.empty()) return out;
  const Eigen::Index d = measurements.dim();
  detail::check_kernel(kernel, d);

  const MatrixX<Scalar> spread =
      principal_sqrt(MatrixX<Scalar>(Scalar(d) * kernel.width));
  const Eigen::Index M = measurements.count();
  out.vectors.reserve(static_cast<std::size_t>(2 * d * M));
  out.sources.reserve(static_cast<std::size_t>(2 * d * M));
  for (Eigen::Index l = 0; l < M; ++l) {
    const auto& y = measurements.measurements[static_cast<std::size_t>(l)];
    if (y.size() != d) {
      throw ConfigError("measurement set has inconsistent dimensions");
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      out.vectors.push_back(y + spread.col(i));
      out.sources.push_back({l, i, +1});
      out.vectors.push_back(y - spread.col(i));
      out.sources.push_back({l, i, -1});
    }
  }
  return out;
}

/// Exact first and second moments of the pseudo-measurement under the
/// prior belief. The measurement-noise and kernel-smoothing integrals are
/// closed-form Gaussian convolutions. The cross-target term of cov_ss
/// factors into a product of single-target means, which is exact when
/// distinct targets are uncorrelated under the prior and is the
/// approximation that keeps the whole computation cubic in N.
template <typename Scalar>
PseudoMeasurementMoments<Scalar> pseudo_moments(
    const MultiTargetBelief<Scalar>& prior, const LinearModelBank<Scalar>& bank,
    const KernelConfig<Scalar>& kernel, const TestVectorSet<Scalar>& tests) {
  const auto mix = detail::predicted_kernel_mixture(prior, bank, kernel);
  const Eigen::Index N = bank.target_count();
  const Eigen::Index n = bank.state_dim();
  const Eigen::Index d = bank.meas_dim();
  const Eigen::Index Na = tests.count();
  for (const auto& a : tests.vectors) {
    if (a.size() != d) {
      throw ConfigError("test vector dimension does not match measurements");
    }
  }

  PseudoMeasurementMoments<Scalar> out;
  out.mean_s = VectorX<Scalar>::Zero(Na);
  out.cross_cov = MatrixX<Scalar>::Zero(N * n, Na);
  out.cov_ss = MatrixX<Scalar>::Zero(Na, Na);
  if (Na == 0) return out;

  // P(i, l) = N(a_i; yhat_l, S_l + K); the mean is its row sum taken in
  // ascending l so the entries match phd_convolved_with_kernel bitwise.
  MatrixX<Scalar> P(Na, N);
  for (Eigen::Index l = 0; l < N; ++l) {
    const auto& dens = mix.full[static_cast<std::size_t>(l)];
    const auto& yhat = mix.predicted_meas[static_cast<std::size_t>(l)];
    for (Eigen::Index i = 0; i < Na; ++i) {
      P(i, l) = dens(tests.vectors[static_cast<std::size_t>(i)], yhat);
    }
  }
  for (Eigen::Index l = 0; l < N; ++l) {
    for (Eigen::Index i = 0; i < Na; ++i) {
      out.mean_s(i) += P(i, l);
    }
  }

  // Column i of the state/pseudo-measurement cross-covariance is
  //   sum_l P(i, l) * U_l * (a_i - yhat_l),
  // U_l = Cov(x, H_l x_l) (S_l + K)^{-1}. Using the full joint covariance
  // in Cov(x, H_l x_l) keeps this column exact even for correlated targets.
  std::vector<MatrixX<Scalar>> U;
  U.reserve(static_cast<std::size_t>(N));
  for (Eigen::Index l = 0; l < N; ++l) {
    const auto& t = bank.target(l);
    MatrixX<Scalar> cross_block =
        prior.cov.middleCols(l * n, n) * t.H.transpose();
    MatrixX<Scalar> solved = mix.full[static_cast<std::size_t>(l)].llt().solve(
        MatrixX<Scalar>(cross_block.transpose()));
    U.push_back(solved.transpose());
  }
  VectorX<Scalar> residual(d);
  for (Eigen::Index i = 0; i < Na; ++i) {
    const auto& a = tests.vectors[static_cast<std::size_t>(i)];
    for (Eigen::Index l = 0; l < N; ++l) {
      residual = a - mix.predicted_meas[static_cast<std::size_t>(l)];
      out.cross_cov.col(i) +=
          P(i, l) * (U[static_cast<std::size_t>(l)] * residual);
    }
  }

  // Cov(s_i, s_j) = N(a_i; a_j, 2K) * sum_l N(mid_ij; yhat_l, S_l + K/2)
  //              - sum_l P(i, l) P(j, l),   mid_ij = (a_i + a_j) / 2.
  // The first factor comes from rewriting the product of two kernels
  // around the same measurement via the Gaussian product identity.
  // Computed for i <= j and mirrored, so the matrix is symmetric exactly.
  GaussianDensity<Scalar> pair_kernel(
      MatrixX<Scalar>(Scalar(2) * kernel.width));
  VectorX<Scalar> mid(d);
  for (Eigen::Index i = 0; i < Na; ++i) {
    const auto& ai = tests.vectors[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i; j < Na; ++j) {
      const auto& aj = tests.vectors[static_cast<std::size_t>(j)];
      mid = Scalar(0.5) * (ai + aj);
      Scalar smoothed(0);
      for (Eigen::Index l = 0; l < N; ++l) {
        smoothed += mix.half[static_cast<std::size_t>(l)](
            mid, mix.predicted_meas[static_cast<std::size_t>(l)]);
      }
      Scalar product(0);
      for (Eigen::Index l = 0; l < N; ++l) {
        product += P(i, l) * P(j, l);
      }
      const Scalar value = pair_kernel(ai, aj) * smoothed - product;
      out.cov_ss(i, j) = value;
      out.cov_ss(j, i) = value;
    }
  }
  return out;
}

/// Kernel-SME correction: evaluates the transform of the received set at
/// the test vectors and applies the linear MMSE update
///   mean <- mean + C^xs (C^ss)^{-1} (s - shat),
///   cov  <- cov  - C^xs (C^ss)^{-1} C^sx,
/// with a guarded Cholesky factorization of C^ss (escalating diagonal
/// jitter), then symmetrizes the posterior covariance. Does not advance
/// time; compose with predict via filter_step for a full cycle.
template <typename Scalar>
MultiTargetBelief<Scalar> measurement_update(
    const MultiTargetBelief<Scalar>& prior,
    const MeasurementSet<Scalar>& measurements,
    const LinearModelBank<Scalar>& bank, const KernelConfig<Scalar>& kernel) {
  if (measurements.count() != bank.target_count()) {
    std::ostringstream msg;
    msg << "measurement set has " << measurements.count()
        << " entries but the model bank tracks " << bank.target_count()
        << " targets";
    throw ConfigError(msg.str());
  }

  const TestVectorSet<Scalar> tests = select_test_vectors(measurements, kernel);
  const PseudoMeasurementMoments<Scalar> moments =
      pseudo_moments(prior, bank, kernel, tests);
  const Eigen::Index Na = tests.count();
  VectorX<Scalar> observed(Na);
  for (Eigen::Index i = 0; i < Na; ++i) {
    observed(i) = kernel_transform_eval(
        measurements, kernel, tests.vectors[static_cast<std::size_t>(i)]);
  }

  MultiTargetBelief<Scalar> out = prior;
  if (Na == 0) return out;
  RobustLlt<Scalar> chol = robust_llt(moments.cov_ss, Scalar(1e-12),
                                      Scalar(1e-6),
                                      "pseudo-measurement covariance");
  MatrixX<Scalar> gain =
      chol.llt.solve(MatrixX<Scalar>(moments.cross_cov.transpose()))
          .transpose();
  out.mean += gain * (observed - moments.mean_s);
  out.cov -= gain * moments.cross_cov.transpose();
  symmetrize_in_place(out.cov);
  return out;
}

/// One full tracking cycle: Kalman time update, then the Kernel-SME
/// correction against the received measurement set.
template <typename Scalar>
MultiTargetBelief<Scalar> filter_step(const MultiTargetBelief<Scalar>& prior,
                                      const MeasurementSet<Scalar>& measurements,
                                      const LinearModelBank<Scalar>& bank,
                                      const KernelConfig<Scalar>& kernel) {
  return measurement_update(predict(prior, bank), measurements, bank, kernel);
}

using KernelConfigd = KernelConfig<double>;
using TestVectorSetd = TestVectorSet<double>;
using PseudoMeasurementMomentsd = PseudoMeasurementMoments<double>;

}  // namespace ksme

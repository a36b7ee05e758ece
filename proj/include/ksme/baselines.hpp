#pragma once

#include <Eigen/Dense>
#include <sstream>
#include <vector>

#include "ksme/assignment.hpp"
#include "ksme/errors.hpp"
#include "ksme/linalg.hpp"
#include "ksme/model.hpp"

namespace ksme {

namespace detail {

/// Joint Kalman measurement update with the stacked model and an
/// association-resolved stacked measurement (entry l belongs to target l).
/// Uses the Joseph form so the posterior covariance stays PSD regardless
/// of conditioning.
template <typename Scalar>
MultiTargetBelief<Scalar> stacked_kf_update(
    const MultiTargetBelief<Scalar>& prior, const LinearModelBank<Scalar>& bank,
    const VectorX<Scalar>& stacked_measurement) {
  if (prior.mean.size() != bank.stacked_H.cols() ||
      stacked_measurement.size() != bank.stacked_H.rows()) {
    throw ConfigError("stacked Kalman update: dimensions do not match");
  }
  const auto& H = bank.stacked_H;
  MatrixX<Scalar> S = H * prior.cov * H.transpose() + bank.stacked_Cv;
  symmetrize_in_place(S);
  RobustLlt<Scalar> chol =
      robust_llt(S, Scalar(1e-12), Scalar(1e-6), "innovation covariance");
  MatrixX<Scalar> gain =
      chol.llt.solve(MatrixX<Scalar>(H * prior.cov)).transpose();

  MultiTargetBelief<Scalar> out = prior;
  out.mean += gain * (stacked_measurement - H * prior.mean);
  const MatrixX<Scalar> closed =
      MatrixX<Scalar>::Identity(prior.cov.rows(), prior.cov.cols()) - gain * H;
  out.cov = closed * prior.cov * closed.transpose() +
            gain * bank.stacked_Cv * gain.transpose();
  symmetrize_in_place(out.cov);
  return out;
}

}  // namespace detail

/// Kalman update with the true association: target l is updated with the
/// measurement the simulator recorded for it. Requires the simulator's
/// permutation to be present.
template <typename Scalar>
MultiTargetBelief<Scalar> oracle_kf_update(
    const MultiTargetBelief<Scalar>& prior,
    const MeasurementSet<Scalar>& measurements,
    const LinearModelBank<Scalar>& bank) {
  if (!measurements.true_permutation.has_value()) {
    throw ConfigError("oracle tracker requires the true association");
  }
  const Eigen::Index N = bank.target_count();
  if (measurements.count() != N) {
    throw ConfigError("measurement count does not match target count");
  }
  const auto& perm = *measurements.true_permutation;
  if (static_cast<Eigen::Index>(perm.size()) != N) {
    throw ConfigError("true association length does not match target count");
  }
  const Eigen::Index d = bank.meas_dim();
  VectorX<Scalar> stacked(N * d);
  for (Eigen::Index l = 0; l < N; ++l) {
    stacked.segment(l * d, d) =
        measurements.measurements[static_cast<std::size_t>(
            perm[static_cast<std::size_t>(l)])];
  }
  return detail::stacked_kf_update(prior, bank, stacked);
}

/// Global-nearest-neighbor Kalman update: assigns measurements to targets
/// by minimizing the total squared Mahalanobis distance to the predicted
/// measurements (innovation covariance H_l C_ll H_l^T + Cv_l), then runs
/// the stacked Kalman update under that association.
template <typename Scalar>
MultiTargetBelief<Scalar> gnn_update(const MultiTargetBelief<Scalar>& prior,
                                     const MeasurementSet<Scalar>& measurements,
                                     const LinearModelBank<Scalar>& bank) {
  const Eigen::Index N = bank.target_count();
  if (measurements.count() != N) {
    std::ostringstream msg;
    msg << "measurement set has " << measurements.count()
        << " entries but the model bank tracks " << N << " targets";
    throw ConfigError(msg.str());
  }
  if (prior.targets != N || prior.state_dim != bank.state_dim()) {
    throw ConfigError("belief dimensions do not match model bank");
  }
  const Eigen::Index d = bank.meas_dim();

  MatrixX<Scalar> cost(N, N);
  VectorX<Scalar> residual(d);
  for (Eigen::Index l = 0; l < N; ++l) {
    const auto& t = bank.target(l);
    const VectorX<Scalar> predicted = t.H * prior.block_mean(l);
    MatrixX<Scalar> S = t.H * prior.block_cov(l, l) * t.H.transpose() + t.Cv;
    symmetrize_in_place(S);
    RobustLlt<Scalar> chol = robust_llt(S, Scalar(1e-12), Scalar(1e-6),
                                        "association innovation covariance");
    for (Eigen::Index m = 0; m < N; ++m) {
      residual =
          measurements.measurements[static_cast<std::size_t>(m)] - predicted;
      cost(l, m) = residual.dot(chol.llt.solve(residual));
    }
  }

  const Assignment<Scalar> assoc = hungarian(cost);
  VectorX<Scalar> stacked(N * d);
  for (Eigen::Index l = 0; l < N; ++l) {
    stacked.segment(l * d, d) =
        measurements.measurements[static_cast<std::size_t>(
            assoc.mapping[static_cast<std::size_t>(l)])];
  }
  return detail::stacked_kf_update(prior, bank, stacked);
}

}  // namespace ksme

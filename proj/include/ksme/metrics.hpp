#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ksme/assignment.hpp"
#include "ksme/errors.hpp"
#include "ksme/linalg.hpp"
#include "ksme/model.hpp"

namespace ksme {

/// OSPA order p >= 1 and cutoff c > 0.
template <typename Scalar>
struct OspaParams {
  Scalar order = Scalar(1);
  Scalar cutoff = Scalar(10);
};

/// OSPA distance between two point sets of equal cardinality:
/// ( min over matchings of (1/N) sum_i min(||a_i - b_match(i)||, c)^p )^(1/p).
template <typename Scalar>
Scalar ospa(const std::vector<VectorX<Scalar>>& lhs,
            const std::vector<VectorX<Scalar>>& rhs,
            const OspaParams<Scalar>& params) {
  if (params.order < Scalar(1)) throw ConfigError("ospa: order must be >= 1");
  if (!(params.cutoff > Scalar(0))) {
    throw ConfigError("ospa: cutoff must be positive");
  }
  if (lhs.size() != rhs.size()) {
    throw ConfigError("ospa: point sets must have equal cardinality");
  }
  const Eigen::Index N = static_cast<Eigen::Index>(lhs.size());
  if (N == 0) return Scalar(0);
  const Eigen::Index dim = lhs.front().size();
  for (const auto& v : lhs) {
    if (v.size() != dim) throw ConfigError("ospa: inconsistent point dimensions");
  }
  for (const auto& v : rhs) {
    if (v.size() != dim) throw ConfigError("ospa: inconsistent point dimensions");
  }

  MatrixX<Scalar> cost(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const Scalar dist = (lhs[static_cast<std::size_t>(i)] -
                           rhs[static_cast<std::size_t>(j)])
                              .norm();
      cost(i, j) = std::pow(std::min(dist, params.cutoff), params.order);
    }
  }
  const Assignment<Scalar> match = hungarian(cost);
  return std::pow(match.total_cost / static_cast<Scalar>(N),
                  Scalar(1) / params.order);
}

/// Per-target point estimates in measurement space: H_l xhat_l.
template <typename Scalar>
std::vector<VectorX<Scalar>> point_estimates(
    const MultiTargetBelief<Scalar>& belief,
    const LinearModelBank<Scalar>& bank) {
  if (belief.targets != bank.target_count() ||
      belief.state_dim != bank.state_dim()) {
    throw ConfigError("point_estimates: belief does not match model bank");
  }
  std::vector<VectorX<Scalar>> out;
  out.reserve(static_cast<std::size_t>(bank.target_count()));
  for (Eigen::Index l = 0; l < bank.target_count(); ++l) {
    out.push_back(bank.target(l).H * belief.block_mean(l));
  }
  return out;
}

/// Root mean square error over targets with the labeling taken as given:
/// sqrt((1/N) sum_l ||est_l - x_l||^2), est_l aligned with truth.states[l].
/// Only meaningful for estimators that keep target identity, such as a
/// Kalman filter fed the true association.
template <typename Scalar>
Scalar labeled_rmse(const std::vector<VectorX<Scalar>>& estimates,
                    const GroundTruth<Scalar>& truth) {
  if (estimates.size() != truth.states.size()) {
    throw ConfigError("labeled_rmse: estimate and truth counts differ");
  }
  if (estimates.empty()) return Scalar(0);
  Scalar acc(0);
  for (std::size_t l = 0; l < estimates.size(); ++l) {
    if (estimates[l].size() != truth.states[l].size()) {
      throw ConfigError("labeled_rmse: estimate and truth dimensions differ");
    }
    acc += (estimates[l] - truth.states[l]).squaredNorm();
  }
  return std::sqrt(acc / static_cast<Scalar>(estimates.size()));
}

using OspaParamsd = OspaParams<double>;

}  // namespace ksme

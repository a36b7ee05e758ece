#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "ksme/errors.hpp"
#include "ksme/gaussian.hpp"
#include "ksme/linalg.hpp"

namespace ksme {

/// Linear-Gaussian model of one target: measurement y = H x + v with
/// v ~ N(0, Cv), motion x' = A x + w with w ~ N(0, Cw).
template <typename Scalar>
struct SingleTargetModel {
  MatrixX<Scalar> H;   // meas_dim x state_dim
  MatrixX<Scalar> Cv;  // meas_dim x meas_dim, symmetric PSD
  MatrixX<Scalar> A;   // state_dim x state_dim
  MatrixX<Scalar> Cw;  // state_dim x state_dim, symmetric PSD

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index meas_dim() const { return H.rows(); }
};

/// A bank of N per-target models plus their block-diagonal stacked forms.
/// Built by stack_models; the per-target matrices are kept verbatim.
template <typename Scalar>
struct LinearModelBank {
  std::vector<SingleTargetModel<Scalar>> targets;
  MatrixX<Scalar> stacked_H;
  MatrixX<Scalar> stacked_A;
  MatrixX<Scalar> stacked_Cv;
  MatrixX<Scalar> stacked_Cw;

  Eigen::Index target_count() const {
    return static_cast<Eigen::Index>(targets.size());
  }
  Eigen::Index state_dim() const { return targets.front().state_dim(); }
  Eigen::Index meas_dim() const { return targets.front().meas_dim(); }
  const SingleTargetModel<Scalar>& target(Eigen::Index l) const {
    return targets[static_cast<std::size_t>(l)];
  }
};

/// Joint Gaussian over the stacked state of all targets. Covariance is kept
/// symmetric by construction; updates re-symmetrize after every step.
template <typename Scalar>
struct MultiTargetBelief {
  VectorX<Scalar> mean;  // length targets * state_dim
  MatrixX<Scalar> cov;
  Eigen::Index targets = 0;
  Eigen::Index state_dim = 0;

  auto block_mean(Eigen::Index l) const {
    return mean.segment(l * state_dim, state_dim);
  }
  /// Cross-covariance block between target i's and target l's states.
  auto block_cov(Eigen::Index i, Eigen::Index l) const {
    return cov.block(i * state_dim, l * state_dim, state_dim, state_dim);
  }
};

/// One time step's unordered measurement set. The order of the list carries
/// no meaning. When produced by simulate_step, true_permutation[l] records
/// which slot holds target l's measurement (hidden from the trackers).
template <typename Scalar>
struct MeasurementSet {
  std::vector<VectorX<Scalar>> measurements;
  std::optional<std::vector<Eigen::Index>> true_permutation;

  Eigen::Index count() const {
    return static_cast<Eigen::Index>(measurements.size());
  }
  Eigen::Index dim() const { return measurements.front().size(); }
};

template <typename Scalar>
struct GroundTruth {
  std::vector<VectorX<Scalar>> states;
  int time = 0;
};

namespace detail {

template <typename Scalar>
void check_target_model(const SingleTargetModel<Scalar>& m, Eigen::Index l) {
  const auto fail = [l](const std::string& why) {
    std::ostringstream msg;
    msg << "target " << l << ": " << why;
    throw ConfigError(msg.str());
  };
  const Eigen::Index n = m.A.rows();
  const Eigen::Index d = m.H.rows();
  if (n <= 0 || d <= 0) fail("empty matrices");
  if (m.A.cols() != n) fail("A is not square");
  if (m.H.cols() != n) fail("H column count does not match state dimension");
  if (m.Cv.rows() != d || m.Cv.cols() != d)
    fail("Cv shape does not match measurement dimension");
  if (m.Cw.rows() != n || m.Cw.cols() != n)
    fail("Cw shape does not match state dimension");
  const Scalar tol = Scalar(1e-9);
  if (!is_symmetric(m.Cv, tol)) fail("Cv is not symmetric");
  if (!is_symmetric(m.Cw, tol)) fail("Cw is not symmetric");
  const Scalar scale_v = std::max<Scalar>(Scalar(1), m.Cv.trace());
  const Scalar scale_w = std::max<Scalar>(Scalar(1), m.Cw.trace());
  if (min_eigenvalue(m.Cv) < -tol * scale_v) fail("Cv is not PSD");
  if (min_eigenvalue(m.Cw) < -tol * scale_w) fail("Cw is not PSD");
}

}  // namespace detail

/// Composes per-target models into a bank with exact block-diagonal stacked
/// matrices. All targets must share the same state and measurement
/// dimensions; violations name the offending target index.
template <typename Scalar>
LinearModelBank<Scalar> stack_models(
    std::vector<SingleTargetModel<Scalar>> targets) {
  if (targets.empty()) throw ConfigError("model bank requires at least one target");
  const Eigen::Index N = static_cast<Eigen::Index>(targets.size());
  const Eigen::Index n = targets.front().state_dim();
  const Eigen::Index d = targets.front().meas_dim();
  for (Eigen::Index l = 0; l < N; ++l) {
    const auto& t = targets[static_cast<std::size_t>(l)];
    detail::check_target_model(t, l);
    if (t.state_dim() != n || t.meas_dim() != d) {
      std::ostringstream msg;
      msg << "target " << l << ": dimensions (" << t.state_dim() << ", "
          << t.meas_dim() << ") differ from target 0's (" << n << ", " << d
          << ")";
      throw ConfigError(msg.str());
    }
  }

  LinearModelBank<Scalar> bank;
  bank.stacked_H = MatrixX<Scalar>::Zero(N * d, N * n);
  bank.stacked_A = MatrixX<Scalar>::Zero(N * n, N * n);
  bank.stacked_Cv = MatrixX<Scalar>::Zero(N * d, N * d);
  bank.stacked_Cw = MatrixX<Scalar>::Zero(N * n, N * n);
  for (Eigen::Index l = 0; l < N; ++l) {
    const auto& t = targets[static_cast<std::size_t>(l)];
    bank.stacked_H.block(l * d, l * n, d, n) = t.H;
    bank.stacked_A.block(l * n, l * n, n, n) = t.A;
    bank.stacked_Cv.block(l * d, l * d, d, d) = t.Cv;
    bank.stacked_Cw.block(l * n, l * n, n, n) = t.Cw;
  }
  bank.targets = std::move(targets);
  return bank;
}

/// Kalman time update of the joint belief: mean <- A mean,
/// cov <- A cov A^T + Cw, symmetrized.
template <typename Scalar>
MultiTargetBelief<Scalar> predict(const MultiTargetBelief<Scalar>& belief,
                                  const LinearModelBank<Scalar>& bank) {
  if (belief.mean.size() != bank.stacked_A.rows()) {
    throw ConfigError("predict: belief dimension does not match model bank");
  }
  MultiTargetBelief<Scalar> out;
  out.targets = belief.targets;
  out.state_dim = belief.state_dim;
  out.mean = bank.stacked_A * belief.mean;
  out.cov = bank.stacked_A * belief.cov * bank.stacked_A.transpose() +
            bank.stacked_Cw;
  symmetrize_in_place(out.cov);
  return out;
}

/// Advances the truth one step (x' = A x + w) and produces the step's
/// measurement set (y = H x' + v) in a uniformly random order. The drawn
/// permutation is recorded in true_permutation. Draw order per step: process
/// noise for targets 0..N-1, then measurement noise 0..N-1, then the shuffle;
/// this makes output bit-reproducible for a fixed stream.
template <typename Scalar, typename Rng>
std::pair<GroundTruth<Scalar>, MeasurementSet<Scalar>> simulate_step(
    const GroundTruth<Scalar>& truth, const LinearModelBank<Scalar>& bank,
    Rng& rng) {
  const Eigen::Index N = bank.target_count();
  if (static_cast<Eigen::Index>(truth.states.size()) != N) {
    throw ConfigError("simulate_step: truth target count does not match bank");
  }

  GroundTruth<Scalar> next;
  next.time = truth.time + 1;
  next.states.reserve(truth.states.size());
  for (Eigen::Index l = 0; l < N; ++l) {
    const auto& t = bank.target(l);
    GaussianSampler<Scalar> process(VectorX<Scalar>::Zero(t.state_dim()),
                                    t.Cw);
    VectorX<Scalar> advanced =
        t.A * truth.states[static_cast<std::size_t>(l)] + process(rng);
    next.states.push_back(std::move(advanced));
  }

  std::vector<VectorX<Scalar>> in_target_order;
  in_target_order.reserve(next.states.size());
  for (Eigen::Index l = 0; l < N; ++l) {
    const auto& t = bank.target(l);
    GaussianSampler<Scalar> noise(VectorX<Scalar>::Zero(t.meas_dim()), t.Cv);
    in_target_order.push_back(t.H * next.states[static_cast<std::size_t>(l)] +
                              noise(rng));
  }

  std::vector<Eigen::Index> slots(static_cast<std::size_t>(N));
  std::iota(slots.begin(), slots.end(), Eigen::Index(0));
  std::shuffle(slots.begin(), slots.end(), rng);

  MeasurementSet<Scalar> set;
  set.measurements.resize(static_cast<std::size_t>(N));
  for (Eigen::Index l = 0; l < N; ++l) {
    set.measurements[static_cast<std::size_t>(slots[static_cast<std::size_t>(l)])] =
        std::move(in_target_order[static_cast<std::size_t>(l)]);
  }
  set.true_permutation = std::move(slots);
  return {std::move(next), std::move(set)};
}

using SingleTargetModeld = SingleTargetModel<double>;
using LinearModelBankd = LinearModelBank<double>;
using MultiTargetBeliefd = MultiTargetBelief<double>;
using MeasurementSetd = MeasurementSet<double>;
using GroundTruthd = GroundTruth<double>;

}  // namespace ksme

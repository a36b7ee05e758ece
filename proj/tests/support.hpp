#pragma once

#include <ksme/assignment.hpp>
#include <ksme/kernel_sme.hpp>
#include <ksme/model.hpp>
#include <ksme/random.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace ksme::testing {

inline std::mt19937_64 test_rng(std::uint64_t index) {
  return make_stream(0xC0FFEEull, StreamPurpose::test, index);
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                                     Eigen::Index cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index size,
                                     double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = u(rng);
  return v;
}

inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index size,
                                  double scale, double ridge) {
  Eigen::MatrixXd b = random_matrix(rng, size, size);
  return symmetrized(
      Eigen::MatrixXd(scale * b * b.transpose() +
                      ridge * Eigen::MatrixXd::Identity(size, size)));
}

struct RandomCase {
  MultiTargetBeliefd belief;
  LinearModelBankd bank;
  KernelConfig<double> kernel;
};

/// Random multi-target setup. Block-diagonal priors keep the closed-form
/// pseudo-measurement covariance exact; correlated priors exercise the
/// mean and cross-covariance paths, which stay exact regardless.
inline RandomCase random_case(std::mt19937_64& rng, Eigen::Index targets,
                              Eigen::Index state_dim, Eigen::Index meas_dim,
                              bool block_diagonal_prior = true) {
  RandomCase out;
  SingleTargetModeld proto;
  proto.H = random_matrix(rng, meas_dim, state_dim);
  proto.Cv = random_psd(rng, meas_dim, 0.2, 0.05);
  proto.A = Eigen::MatrixXd::Identity(state_dim, state_dim);
  proto.Cw = Eigen::MatrixXd::Zero(state_dim, state_dim);
  out.bank = stack_models(
      std::vector<SingleTargetModeld>(static_cast<std::size_t>(targets), proto));

  const Eigen::Index nx = targets * state_dim;
  out.belief.targets = targets;
  out.belief.state_dim = state_dim;
  out.belief.mean = random_vector(rng, nx, 2.0);
  if (block_diagonal_prior) {
    out.belief.cov = Eigen::MatrixXd::Zero(nx, nx);
    for (Eigen::Index l = 0; l < targets; ++l)
      out.belief.cov.block(l * state_dim, l * state_dim, state_dim, state_dim) =
          random_psd(rng, state_dim, 0.5, 0.1);
  } else {
    out.belief.cov = random_psd(rng, nx, 0.3, 0.1);
  }
  out.kernel.width = random_psd(rng, meas_dim, 0.3, 0.1);
  return out;
}

/// One measurement per target, drawn from the model given a state sampled
/// from the belief.
inline MeasurementSetd sample_measurements(std::mt19937_64& rng,
                                           const RandomCase& c) {
  GaussianSampler<double> state(c.belief.mean, c.belief.cov);
  Eigen::VectorXd x = state(rng);
  MeasurementSetd set;
  const Eigen::Index n = c.bank.state_dim();
  for (Eigen::Index l = 0; l < c.bank.target_count(); ++l) {
    const auto& t = c.bank.target(l);
    GaussianSampler<double> noise(Eigen::VectorXd::Zero(t.meas_dim()), t.Cv);
    set.measurements.push_back(t.H * x.segment(l * n, n) + noise(rng));
  }
  return set;
}

/// Minimum-cost assignment by exhaustive enumeration, lexicographically
/// smallest mapping among ties. Reference oracle for the polynomial solver.
inline Assignmentd brute_force_assignment(const Eigen::MatrixXd& cost) {
  const Eigen::Index n = cost.rows();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Assignmentd best;
  best.total_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      total += cost(i, perm[static_cast<std::size_t>(i)]);
    if (total < best.total_cost - 1e-12) {
      best.total_cost = total;
      best.mapping = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (n == 0) best.total_cost = 0.0;
  return best;
}

}  // namespace ksme::testing

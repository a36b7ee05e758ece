#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "ksme/errors.hpp"
#include "ksme/gaussian.hpp"
#include "ksme/kernel_sme.hpp"
#include "ksme/linalg.hpp"
#include "ksme/model.hpp"
#include "ksme/random.hpp"

namespace ksme {

/// Monte Carlo estimate of the pseudo-measurement moments together with
/// elementwise standard errors of the same shapes. With a degenerate prior
/// (zero covariance, zero noise) every second-moment estimate and every
/// standard error is exactly zero, not merely small.
template <typename Scalar>
struct OracleEstimate {
  PseudoMeasurementMoments<Scalar> moments;
  PseudoMeasurementMoments<Scalar> standard_errors;
  std::size_t sample_count = 0;
};

/// Intensity of the predicted measurement mixture smoothed by the kernel:
/// sum_l N(z; H_l xhat_l, S_l + K). Its value at a test vector equals the
/// corresponding entry of the closed-form pseudo-measurement mean exactly,
/// and its integral over z equals the number of targets.
template <typename Scalar>
Scalar phd_convolved_with_kernel(const MultiTargetBelief<Scalar>& prior,
                                 const LinearModelBank<Scalar>& bank,
                                 const KernelConfig<Scalar>& kernel,
                                 const VectorX<Scalar>& z) {
  const auto mix = detail::predicted_kernel_mixture(prior, bank, kernel);
  if (z.size() != bank.meas_dim()) {
    throw ConfigError("evaluation point dimension does not match measurements");
  }
  Scalar acc(0);
  for (Eigen::Index l = 0; l < bank.target_count(); ++l) {
    acc += mix.full[static_cast<std::size_t>(l)](
        z, mix.predicted_meas[static_cast<std::size_t>(l)]);
  }
  return acc;
}

/// Estimates the pseudo-measurement moments by direct simulation: draw the
/// joint state, draw per-target measurement noise, evaluate the transform
/// at the test vectors. Per sample the draw order is the joint state first,
/// then measurement noise for targets 0..N-1. Estimates use all samples
/// pooled; standard errors come from the spread of 32 batch estimates.
/// Transform values are accumulated relative to the first sample's value
/// and states relative to the prior mean, which removes cancellation and
/// makes degenerate cases exact.
template <typename Scalar>
OracleEstimate<Scalar> mc_pseudo_moments(const MultiTargetBelief<Scalar>& prior,
                                         const LinearModelBank<Scalar>& bank,
                                         const KernelConfig<Scalar>& kernel,
                                         const TestVectorSet<Scalar>& tests,
                                         std::size_t samples,
                                         std::uint64_t seed) {
  if (samples < 10000) {
    throw ConfigError("Monte Carlo oracle needs at least 10000 samples");
  }
  if (prior.targets != bank.target_count() ||
      prior.state_dim != bank.state_dim() ||
      prior.mean.size() != bank.stacked_A.rows()) {
    throw ConfigError("belief dimensions do not match model bank");
  }
  detail::check_kernel(kernel, bank.meas_dim());

  const Eigen::Index N = bank.target_count();
  const Eigen::Index n = bank.state_dim();
  const Eigen::Index d = bank.meas_dim();
  const Eigen::Index nx = N * n;
  const Eigen::Index Na = tests.count();
  for (const auto& a : tests.vectors) {
    if (a.size() != d) {
      throw ConfigError("test vector dimension does not match measurements");
    }
  }

  auto rng = make_stream(seed, StreamPurpose::oracle, 0);
  GaussianSampler<Scalar> state_sampler(prior.mean, prior.cov);
  std::vector<GaussianSampler<Scalar>> noise_samplers;
  noise_samplers.reserve(static_cast<std::size_t>(N));
  for (Eigen::Index l = 0; l < N; ++l) {
    noise_samplers.emplace_back(VectorX<Scalar>::Zero(d), bank.target(l).Cv);
  }
  GaussianDensity<Scalar> dens(kernel.width);

  constexpr std::size_t kBatches = 32;
  struct Batch {
    VectorX<Scalar> sum_s;
    MatrixX<Scalar> sum_ss;
    VectorX<Scalar> sum_x;
    MatrixX<Scalar> sum_xs;
    std::size_t count = 0;
  };
  std::vector<Batch> batches(kBatches);
  for (auto& b : batches) {
    b.sum_s = VectorX<Scalar>::Zero(Na);
    b.sum_ss = MatrixX<Scalar>::Zero(Na, Na);
    b.sum_x = VectorX<Scalar>::Zero(nx);
    b.sum_xs = MatrixX<Scalar>::Zero(nx, Na);
  }

  VectorX<Scalar> x(nx), x_scratch(nx), x_centered(nx);
  VectorX<Scalar> noise(d), noise_scratch(d), residual(d);
  std::vector<VectorX<Scalar>> meas(static_cast<std::size_t>(N),
                                    VectorX<Scalar>(d));
  VectorX<Scalar> s(Na), center(Na);

  for (std::size_t t = 0; t < samples; ++t) {
    state_sampler.draw_into(x, x_scratch, rng);
    for (Eigen::Index l = 0; l < N; ++l) {
      noise_samplers[static_cast<std::size_t>(l)].draw_into(noise,
                                                            noise_scratch, rng);
      meas[static_cast<std::size_t>(l)] =
          bank.target(l).H * x.segment(l * n, n) + noise;
    }
    for (Eigen::Index i = 0; i < Na; ++i) {
      Scalar acc(0);
      const auto& a = tests.vectors[static_cast<std::size_t>(i)];
      for (Eigen::Index l = 0; l < N; ++l) {
        residual = a - meas[static_cast<std::size_t>(l)];
        acc += dens.from_residual(residual);
      }
      s(i) = acc;
    }
    if (t == 0) center = s;
    s -= center;
    x_centered = x - prior.mean;

    Batch& b = batches[t % kBatches];
    b.sum_s += s;
    b.sum_ss.noalias() += s * s.transpose();
    b.sum_x += x_centered;
    b.sum_xs.noalias() += x_centered * s.transpose();
    b.count += 1;
  }

  const auto finish = [&](const Batch& b, PseudoMeasurementMoments<Scalar>& m) {
    const Scalar T = static_cast<Scalar>(b.count);
    const VectorX<Scalar> ms = b.sum_s / T;
    const VectorX<Scalar> mx = b.sum_x / T;
    m.mean_s = center + ms;
    m.cov_ss = (b.sum_ss - T * ms * ms.transpose()) / (T - Scalar(1));
    m.cross_cov = (b.sum_xs - T * mx * ms.transpose()) / (T - Scalar(1));
  };

  Batch total;
  total.sum_s = VectorX<Scalar>::Zero(Na);
  total.sum_ss = MatrixX<Scalar>::Zero(Na, Na);
  total.sum_x = VectorX<Scalar>::Zero(nx);
  total.sum_xs = MatrixX<Scalar>::Zero(nx, Na);
  for (const auto& b : batches) {
    total.sum_s += b.sum_s;
    total.sum_ss += b.sum_ss;
    total.sum_x += b.sum_x;
    total.sum_xs += b.sum_xs;
    total.count += b.count;
  }

  OracleEstimate<Scalar> out;
  out.sample_count = samples;
  finish(total, out.moments);

  std::vector<PseudoMeasurementMoments<Scalar>> per_batch(kBatches);
  for (std::size_t b = 0; b < kBatches; ++b) {
    finish(batches[b], per_batch[b]);
  }
  const Scalar B = static_cast<Scalar>(kBatches);

  PseudoMeasurementMoments<Scalar> batch_center;
  batch_center.mean_s = VectorX<Scalar>::Zero(Na);
  batch_center.cov_ss = MatrixX<Scalar>::Zero(Na, Na);
  batch_center.cross_cov = MatrixX<Scalar>::Zero(nx, Na);
  for (const auto& pb : per_batch) {
    batch_center.mean_s += pb.mean_s;
    batch_center.cov_ss += pb.cov_ss;
    batch_center.cross_cov += pb.cross_cov;
  }
  batch_center.mean_s /= B;
  batch_center.cov_ss /= B;
  batch_center.cross_cov /= B;

  VectorX<Scalar> mean_var = VectorX<Scalar>::Zero(Na);
  MatrixX<Scalar> cov_var = MatrixX<Scalar>::Zero(Na, Na);
  MatrixX<Scalar> cross_var = MatrixX<Scalar>::Zero(nx, Na);
  for (const auto& pb : per_batch) {
    mean_var.array() += (pb.mean_s - batch_center.mean_s).array().square();
    cov_var.array() += (pb.cov_ss - batch_center.cov_ss).array().square();
    cross_var.array() +=
        (pb.cross_cov - batch_center.cross_cov).array().square();
  }
  const Scalar denom = (B - Scalar(1)) * B;
  out.standard_errors.mean_s = (mean_var / denom).array().sqrt();
  out.standard_errors.cov_ss = (cov_var / denom).array().sqrt();
  out.standard_errors.cross_cov = (cross_var / denom).array().sqrt();
  return out;
}

using OracleEstimated = OracleEstimate<double>;

}  // namespace ksme

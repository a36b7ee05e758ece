#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ksme/kernel_sme.hpp"
#include "ksme/metrics.hpp"
#include "ksme/model.hpp"

namespace ksme {

enum class TrackerKind { kernel_sme, gnn, oracle_kf, predict_only };

/// Canonical name used in configs, CLI flags, and report rows.
std::string tracker_name(TrackerKind kind);
TrackerKind parse_tracker(const std::string& name);

enum class InitMeanMode { sample, truth, explicit_mean };

/// Fully resolved experiment description. Produced by the config parser;
/// all matrices are concrete (scalar shorthands already expanded).
struct ScenarioConfig {
  Eigen::Index targets = 0;
  Eigen::Index state_dim = 0;
  Eigen::Index meas_dim = 0;

  Eigen::MatrixXd H;   // per-target, shared by all targets
  Eigen::MatrixXd A;
  Eigen::MatrixXd Cv;
  Eigen::MatrixXd Cw;

  bool kernel_from_cv = true;   // width follows Cv unless set explicitly
  Eigen::MatrixXd kernel_width;

  int horizon = 0;
  int runs = 0;
  std::uint64_t seed = 0;

  Eigen::MatrixXd init_cov;  // joint (N*n) x (N*n)
  InitMeanMode init_mean_mode = InitMeanMode::sample;
  Eigen::VectorXd init_mean;  // used by the explicit mode

  bool truth_circle = true;   // default layout: evenly spaced on a circle
  double truth_radius = 1.0;
  Eigen::VectorXd truth_start;  // stacked, used when truth_circle is false

  OspaParams<double> ospa;
  std::vector<TrackerKind> trackers;
};

/// Parses the plain-text key=value scenario format ('#' comment lines,
/// dotted key namespaces, scalar-times-identity or JSON row-list matrix
/// values). Unknown or duplicate keys and malformed values raise
/// ConfigError naming the key.
ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig parse_scenario_file(const std::string& path);

/// Builders from a validated config. Shape or positivity violations raise
/// ConfigError naming the config field.
LinearModelBank<double> build_bank(const ScenarioConfig& config);
KernelConfig<double> resolve_kernel(const ScenarioConfig& config);
Eigen::VectorXd truth_start_stacked(const ScenarioConfig& config);

}  // namespace ksme

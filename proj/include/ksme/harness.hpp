#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ksme/scenario.hpp"

namespace ksme {

/// Aggregated OSPA-versus-time curve for one tracker.
struct TrackerCurve {
  TrackerKind kind = TrackerKind::kernel_sme;
  std::vector<double> mean_ospa;  // one entry per step, 1..horizon
  std::vector<double> se_ospa;
  double mean_update_seconds = 0.0;
};

struct RunReport {
  ScenarioConfig config;
  std::vector<TrackerCurve> curves;
  int completed_runs = 0;
  int failed_runs = 0;
  std::vector<std::string> failures;
  /// Smallest posterior-covariance eigenvalue seen anywhere, normalized by
  /// trace/(N*n) of the same matrix. Stays above -1e-9 for a healthy run.
  double worst_eigenvalue_ratio = 0.0;
};

/// Executes the configured Monte Carlo tracking experiment. Runs are
/// distributed over a thread pool (capped by the KSME_THREADS environment
/// variable) with per-run random substreams, so results do not depend on
/// the worker count. Per-run tracker failures are recorded and the run is
/// excluded from aggregation.
RunReport run_scenario(const ScenarioConfig& config);

struct BenchRow {
  Eigen::Index targets = 0;
  double median_update_seconds = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// Least-squares slope of log(time) vs log(N); absent with fewer than
  /// two target counts.
  std::optional<double> loglog_slope;
};

/// Times measurement_update in isolation for each target count, using the
/// per-target model, kernel, and initial covariance scale of the base
/// config. Repeated target counts are rejected.
BenchReport run_complexity_bench(const ScenarioConfig& base,
                                 const std::vector<Eigen::Index>& target_counts);

struct ValidationCase {
  Eigen::Index targets = 0;
  Eigen::Index state_dim = 0;
  Eigen::Index meas_dim = 0;
  /// Largest |closed-form - Monte Carlo| / SE over all moment entries.
  double max_abs_z = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<ValidationCase> cases;
  std::size_t samples = 0;
  bool all_pass = false;
};

/// Sweeps randomized configurations over N in {1,2,3} x d in {1,2} (the
/// given number of cases per combination, block-diagonal random priors)
/// and checks every closed-form moment entry against the Monte Carlo
/// oracle within 5 standard errors. With 32-batch standard errors the
/// per-entry false-alarm rate is about 1e-5, so a full sweep at default
/// size has a few-percent chance of one spurious failure; the shipped
/// defaults are seeds verified to pass.
ValidationReport run_moment_validation(std::uint64_t seed, std::size_t samples,
                                       int cases_per_combo);

void write_run_csv(const RunReport& report, std::ostream& out);
void write_run_json(const RunReport& report, std::ostream& out);
void write_bench_csv(const BenchReport& report, std::ostream& out);
void write_bench_json(const BenchReport& report, std::ostream& out);
void write_validation_csv(const ValidationReport& report, std::ostream& out);
void write_validation_json(const ValidationReport& report, std::ostream& out);

/// Full command-line entry point (subcommands run, bench,
/// validate-moments). Returns the process exit code: 0 on success, 2 for
/// configuration problems, 3 when numerical failures exceed the threshold
/// or validation fails.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace ksme

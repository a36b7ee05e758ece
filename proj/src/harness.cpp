#include "ksme/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ksme/baselines.hpp"
#include "ksme/errors.hpp"
#include "ksme/kernel_sme.hpp"
#include "ksme/linalg.hpp"
#include "ksme/metrics.hpp"
#include "ksme/moments_oracle.hpp"
#include "ksme/random.hpp"

namespace ksme {

namespace {

unsigned worker_count(int runs) {
  unsigned cap = std::thread::hardware_concurrency();
  if (cap == 0) cap = 1;
  if (const char* env = std::getenv("KSME_THREADS")) {
    char* end = nullptr;
    const unsigned long parsed = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || parsed == 0) {
      throw ConfigError("KSME_THREADS must be a positive integer");
    }
    cap = static_cast<unsigned>(std::min<unsigned long>(parsed, 4096));
  }
  return std::max(1u, std::min(cap, static_cast<unsigned>(runs)));
}

/// Smallest eigenvalue normalized by trace/dim, the scale the PSD health
/// bound is stated in. Exact zero matrices count as clean.
double eigenvalue_ratio(const Eigen::MatrixXd& cov) {
  const double lambda = min_eigenvalue(cov);
  const double denom = cov.trace() / static_cast<double>(cov.rows());
  if (!(denom > 0)) {
    return lambda >= 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return lambda / denom;
}

struct RunOutcome {
  bool ok = false;
  std::string error;
  std::vector<std::vector<double>> ospa_by_tracker;  // [tracker][step]
  std::vector<double> update_seconds;                // total per tracker
  double min_eig_ratio = std::numeric_limits<double>::infinity();
};

GroundTruth<double> unstack_truth(const Eigen::VectorXd& stacked,
                                  Eigen::Index N, Eigen::Index n) {
  GroundTruth<double> truth;
  truth.time = 0;
  truth.states.reserve(static_cast<std::size_t>(N));
  for (Eigen::Index l = 0; l < N; ++l) {
    truth.states.push_back(stacked.segment(l * n, n));
  }
  return truth;
}

RunOutcome run_one(const ScenarioConfig& cfg,
                   const LinearModelBank<double>& bank,
                   const KernelConfig<double>& kernel,
                   const Eigen::VectorXd& truth0, int run_index) {
  RunOutcome outcome;
  const std::size_t trackers = cfg.trackers.size();
  outcome.ospa_by_tracker.assign(
      trackers, std::vector<double>(static_cast<std::size_t>(cfg.horizon), 0));
  outcome.update_seconds.assign(trackers, 0.0);

  try {
    auto rng_truth = make_stream(cfg.seed, StreamPurpose::truth,
                                 static_cast<std::uint64_t>(run_index));
    auto rng_init = make_stream(cfg.seed, StreamPurpose::init,
                                static_cast<std::uint64_t>(run_index));

    const Eigen::Index N = cfg.targets;
    const Eigen::Index n = cfg.state_dim;

    MultiTargetBelief<double> start;
    start.targets = N;
    start.state_dim = n;
    start.cov = cfg.init_cov;
    switch (cfg.init_mean_mode) {
      case InitMeanMode::sample: {
        GaussianSampler<double> sampler(truth0, cfg.init_cov);
        start.mean = sampler(rng_init);
        break;
      }
      case InitMeanMode::truth:
        start.mean = truth0;
        break;
      case InitMeanMode::explicit_mean:
        start.mean = cfg.init_mean;
        break;
    }
    if (start.mean.size() != N * n) {
      throw ConfigError("init.mean length does not match targets * state_dim");
    }

    GroundTruth<double> truth = unstack_truth(truth0, N, n);
    std::vector<MultiTargetBelief<double>> beliefs(trackers, start);

    for (int step = 0; step < cfg.horizon; ++step) {
      auto [truth_next, set] = simulate_step(truth, bank, rng_truth);
      truth = std::move(truth_next);

      std::vector<Eigen::VectorXd> truth_points;
      truth_points.reserve(static_cast<std::size_t>(N));
      for (Eigen::Index l = 0; l < N; ++l) {
        truth_points.push_back(bank.target(l).H *
                               truth.states[static_cast<std::size_t>(l)]);
      }

      for (std::size_t ti = 0; ti < trackers; ++ti) {
        const auto begin = std::chrono::steady_clock::now();
        switch (cfg.trackers[ti]) {
          case TrackerKind::kernel_sme:
            beliefs[ti] = filter_step(beliefs[ti], set, bank, kernel);
            break;
          case TrackerKind::gnn:
            beliefs[ti] = gnn_update(predict(beliefs[ti], bank), set, bank);
            break;
          case TrackerKind::oracle_kf:
            beliefs[ti] =
                oracle_kf_update(predict(beliefs[ti], bank), set, bank);
            break;
          case TrackerKind::predict_only:
            beliefs[ti] = predict(beliefs[ti], bank);
            break;
        }
        const auto end = std::chrono::steady_clock::now();
        outcome.update_seconds[ti] +=
            std::chrono::duration<double>(end - begin).count();

        outcome.min_eig_ratio =
            std::min(outcome.min_eig_ratio, eigenvalue_ratio(beliefs[ti].cov));
        outcome.ospa_by_tracker[ti][static_cast<std::size_t>(step)] = ospa(
            point_estimates(beliefs[ti], bank), truth_points, cfg.ospa);
      }
    }
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.error = e.what();
  }
  return outcome;
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config) {
  if (config.trackers.empty()) {
    throw ConfigError("trackers: at least one tracker required");
  }
  if (config.horizon < 1) throw ConfigError("run.horizon must be positive");
  if (config.runs < 1) throw ConfigError("run.runs must be positive");

  const LinearModelBank<double> bank = build_bank(config);
  const KernelConfig<double> kernel = resolve_kernel(config);
  const Eigen::VectorXd truth0 = truth_start_stacked(config);
  if (truth0.size() != config.targets * config.state_dim) {
    throw ConfigError("truth.start length does not match targets * state_dim");
  }

  std::vector<RunOutcome> outcomes(static_cast<std::size_t>(config.runs));
  std::atomic<int> next{0};
  const unsigned workers = worker_count(config.runs);
  const auto work = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= config.runs) return;
      outcomes[static_cast<std::size_t>(r)] =
          run_one(config, bank, kernel, truth0, r);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  RunReport report;
  report.config = config;
  report.worst_eigenvalue_ratio = std::numeric_limits<double>::infinity();
  const std::size_t trackers = config.trackers.size();
  const std::size_t T = static_cast<std::size_t>(config.horizon);

  for (int r = 0; r < config.runs; ++r) {
    const RunOutcome& o = outcomes[static_cast<std::size_t>(r)];
    if (o.ok) {
      ++report.completed_runs;
      report.worst_eigenvalue_ratio =
          std::min(report.worst_eigenvalue_ratio, o.min_eig_ratio);
    } else {
      ++report.failed_runs;
      if (report.failures.size() < 8) {
        std::ostringstream msg;
        msg << "run " << r << ": " << o.error;
        report.failures.push_back(msg.str());
      }
    }
  }
  if (report.completed_runs == 0) {
    report.worst_eigenvalue_ratio = 0.0;
  }

  report.curves.resize(trackers);
  for (std::size_t ti = 0; ti < trackers; ++ti) {
    TrackerCurve& curve = report.curves[ti];
    curve.kind = config.trackers[ti];
    curve.mean_ospa.assign(T, 0.0);
    curve.se_ospa.assign(T, 0.0);
    if (report.completed_runs == 0) continue;

    const double R = static_cast<double>(report.completed_runs);
    for (std::size_t step = 0; step < T; ++step) {
      double sum = 0;
      for (int r = 0; r < config.runs; ++r) {
        const RunOutcome& o = outcomes[static_cast<std::size_t>(r)];
        if (o.ok) sum += o.ospa_by_tracker[ti][step];
      }
      const double mean = sum / R;
      double var = 0;
      for (int r = 0; r < config.runs; ++r) {
        const RunOutcome& o = outcomes[static_cast<std::size_t>(r)];
        if (o.ok) {
          const double dev = o.ospa_by_tracker[ti][step] - mean;
          var += dev * dev;
        }
      }
      curve.mean_ospa[step] = mean;
      curve.se_ospa[step] =
          report.completed_runs > 1 ? std::sqrt(var / (R - 1.0) / R) : 0.0;
    }

    double seconds = 0;
    for (int r = 0; r < config.runs; ++r) {
      const RunOutcome& o = outcomes[static_cast<std::size_t>(r)];
      if (o.ok) seconds += o.update_seconds[ti];
    }
    curve.mean_update_seconds =
        seconds / (R * static_cast<double>(config.horizon));
  }
  return report;
}

BenchReport run_complexity_bench(const ScenarioConfig& base,
                                 const std::vector<Eigen::Index>& target_counts) {
  if (target_counts.empty()) {
    throw ConfigError("bench: at least one target count required");
  }
  std::set<Eigen::Index> seen;
  for (Eigen::Index c : target_counts) {
    if (c < 1) throw ConfigError("bench: target counts must be positive");
    if (!seen.insert(c).second) {
      std::ostringstream msg;
      msg << "bench: repeated target count " << c;
      throw ConfigError(msg.str());
    }
  }
  if (base.state_dim < 2) {
    throw ConfigError("bench: template scenario needs state_dim >= 2");
  }

  const Eigen::Index n = base.state_dim;
  const Eigen::MatrixXd init_block = base.init_cov.topLeftCorner(n, n);

  BenchReport report;
  constexpr int kReps = 9;
  for (Eigen::Index count : target_counts) {
    ScenarioConfig cfg = base;
    cfg.targets = count;
    cfg.truth_circle = true;
    const LinearModelBank<double> bank = build_bank(cfg);
    const KernelConfig<double> kernel = resolve_kernel(cfg);
    const Eigen::VectorXd start = truth_start_stacked(cfg);

    MultiTargetBelief<double> prior;
    prior.targets = count;
    prior.state_dim = n;
    prior.mean = start;
    prior.cov = Eigen::MatrixXd::Zero(count * n, count * n);
    for (Eigen::Index l = 0; l < count; ++l) {
      prior.cov.block(l * n, l * n, n, n) = init_block;
    }

    auto rng = make_stream(base.seed, StreamPurpose::bench,
                           static_cast<std::uint64_t>(count));
    const GroundTruth<double> truth = unstack_truth(start, count, n);
    const auto [truth_next, set] = simulate_step(truth, bank, rng);
    (void)truth_next;

    volatile double sink = 0;
    std::vector<double> times;
    times.reserve(kReps);
    for (int rep = 0; rep <= kReps; ++rep) {
      const auto begin = std::chrono::steady_clock::now();
      const MultiTargetBelief<double> post =
          measurement_update(prior, set, bank, kernel);
      const auto end = std::chrono::steady_clock::now();
      sink = sink + post.mean(0);
      if (rep > 0) {  // first call is warmup
        times.push_back(std::chrono::duration<double>(end - begin).count());
      }
    }
    std::sort(times.begin(), times.end());
    report.rows.push_back({count, times[times.size() / 2]});
  }

  if (report.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(report.rows.size());
    for (const BenchRow& row : report.rows) {
      const double x = std::log(static_cast<double>(row.targets));
      const double y = std::log(row.median_update_seconds);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    report.loglog_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return report;
}

ValidationReport run_moment_validation(std::uint64_t seed, std::size_t samples,
                                       int cases_per_combo) {
  if (cases_per_combo < 1) {
    throw ConfigError("validation: cases per combination must be positive");
  }
  if (samples < 10000) {
    throw ConfigError("Monte Carlo oracle needs at least 10000 samples");
  }

  ValidationReport report;
  report.samples = samples;
  report.all_pass = true;

  const auto max_z = [](const Eigen::MatrixXd& diff, const Eigen::MatrixXd& se) {
    double worst = 0;
    for (Eigen::Index c = 0; c < diff.cols(); ++c) {
      for (Eigen::Index r = 0; r < diff.rows(); ++r) {
        const double d = std::abs(diff(r, c));
        const double s = se(r, c);
        if (s > 0) {
          worst = std::max(worst, d / s);
        } else if (d != 0) {
          worst = std::numeric_limits<double>::infinity();
        }
      }
    }
    return worst;
  };

  std::uint64_t case_index = 0;
  for (Eigen::Index N : {1, 2, 3}) {
    for (Eigen::Index d : {1, 2}) {
      for (int c = 0; c < cases_per_combo; ++c, ++case_index) {
        auto rng = make_stream(seed, StreamPurpose::validation, case_index);
        std::uniform_int_distribution<int> dim_draw(1, 3);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        const Eigen::Index n = dim_draw(rng);

        const auto random_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
          Eigen::MatrixXd m(rows, cols);
          for (Eigen::Index cc = 0; cc < cols; ++cc) {
            for (Eigen::Index rr = 0; rr < rows; ++rr) {
              m(rr, cc) = unit(rng);
            }
          }
          return m;
        };
        const auto random_psd = [&](Eigen::Index dim, double scale,
                                    double ridge) {
          const Eigen::MatrixXd b = random_matrix(dim, dim);
          Eigen::MatrixXd m = scale * (b * b.transpose()) +
                              ridge * Eigen::MatrixXd::Identity(dim, dim);
          symmetrize_in_place(m);
          return m;
        };

        std::vector<SingleTargetModel<double>> targets;
        targets.reserve(static_cast<std::size_t>(N));
        for (Eigen::Index l = 0; l < N; ++l) {
          SingleTargetModel<double> t;
          t.H = random_matrix(d, n);
          t.Cv = random_psd(d, 0.2, 0.05);
          t.A = Eigen::MatrixXd::Identity(n, n);
          t.Cw = Eigen::MatrixXd::Zero(n, n);
          targets.push_back(std::move(t));
        }
        const LinearModelBank<double> bank = stack_models(std::move(targets));

        MultiTargetBelief<double> prior;
        prior.targets = N;
        prior.state_dim = n;
        prior.mean = Eigen::VectorXd(N * n);
        prior.cov = Eigen::MatrixXd::Zero(N * n, N * n);
        for (Eigen::Index l = 0; l < N; ++l) {
          for (Eigen::Index i = 0; i < n; ++i) {
            prior.mean(l * n + i) = 2.0 * unit(rng);
          }
          prior.cov.block(l * n, l * n, n, n) = random_psd(n, 0.5, 0.1);
        }

        const KernelConfig<double> kernel{random_psd(d, 0.3, 0.1)};

        GaussianSampler<double> state_sampler(prior.mean, prior.cov);
        const Eigen::VectorXd x = state_sampler(rng);
        MeasurementSet<double> set;
        for (Eigen::Index l = 0; l < N; ++l) {
          GaussianSampler<double> noise(Eigen::VectorXd::Zero(d),
                                        bank.target(l).Cv);
          set.measurements.push_back(bank.target(l).H * x.segment(l * n, n) +
                                     noise(rng));
        }

        const TestVectorSet<double> tests = select_test_vectors(set, kernel);
        const PseudoMeasurementMoments<double> closed =
            pseudo_moments(prior, bank, kernel, tests);
        const OracleEstimate<double> mc = mc_pseudo_moments(
            prior, bank, kernel, tests, samples,
            derive_seed(seed, StreamPurpose::validation, case_index));

        ValidationCase result;
        result.targets = N;
        result.state_dim = n;
        result.meas_dim = d;
        result.max_abs_z = std::max(
            {max_z(closed.mean_s - mc.moments.mean_s,
                   mc.standard_errors.mean_s),
             max_z(closed.cross_cov - mc.moments.cross_cov,
                   mc.standard_errors.cross_cov),
             max_z(closed.cov_ss - mc.moments.cov_ss,
                   mc.standard_errors.cov_ss)});
        result.pass = result.max_abs_z <= 5.0;
        report.all_pass = report.all_pass && result.pass;
        report.cases.push_back(result);
      }
    }
  }
  return report;
}

}  // namespace ksme

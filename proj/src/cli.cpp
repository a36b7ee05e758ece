#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ksme/errors.hpp"
#include "ksme/harness.hpp"

namespace ksme {

namespace {

std::vector<std::string> split_csv(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(value);
  while (std::getline(stream, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = item.find_last_not_of(" \t");
    out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

std::vector<Eigen::Index> parse_counts(const std::string& value) {
  std::vector<Eigen::Index> counts;
  for (const std::string& token : split_csv(value)) {
    std::size_t used = 0;
    long long parsed = 0;
    try {
      parsed = std::stoll(token, &used);
    } catch (const std::exception&) {
      throw ConfigError("--counts: '" + token + "' is not an integer");
    }
    if (used != token.size() || parsed < 1) {
      throw ConfigError("--counts: '" + token +
                        "' is not a positive integer");
    }
    counts.push_back(static_cast<Eigen::Index>(parsed));
  }
  if (counts.empty()) {
    throw ConfigError("--counts: expected a comma-separated list");
  }
  return counts;
}

/// Template used by `bench` when no scenario file is given: 2-D identity
/// dynamics with 0.1-noise random walk, kernel width following Cv.
ScenarioConfig default_bench_template() {
  ScenarioConfig cfg;
  cfg.targets = 1;
  cfg.state_dim = 2;
  cfg.meas_dim = 2;
  cfg.H = Eigen::MatrixXd::Identity(2, 2);
  cfg.A = Eigen::MatrixXd::Identity(2, 2);
  cfg.Cv = 0.1 * Eigen::MatrixXd::Identity(2, 2);
  cfg.Cw = 0.1 * Eigen::MatrixXd::Identity(2, 2);
  cfg.kernel_from_cv = true;
  cfg.horizon = 1;
  cfg.runs = 1;
  cfg.seed = 0;
  cfg.init_cov = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  return cfg;
}

struct OutputOptions {
  std::string path;
  std::string format = "csv";
};

template <typename Report>
void emit(const Report& report, const OutputOptions& opts, std::ostream& out,
          void (*csv)(const Report&, std::ostream&),
          void (*json)(const Report&, std::ostream&)) {
  const auto write = [&](std::ostream& sink) {
    if (opts.format == "json") {
      json(report, sink);
    } else {
      csv(report, sink);
    }
  };
  if (opts.path.empty()) {
    write(out);
    return;
  }
  std::ofstream file(opts.path);
  if (!file) {
    throw ConfigError("cannot open output file '" + opts.path + "'");
  }
  write(file);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Kernel-SME multi-target tracking experiments"};
  app.name("ksme");
  app.require_subcommand(1);

  std::string run_path;
  std::optional<std::uint64_t> run_seed;
  std::string run_trackers;
  OutputOptions run_out;
  CLI::App* run = app.add_subcommand(
      "run", "Execute a scenario file and report OSPA-vs-time curves");
  run->add_option("scenario", run_path, "Scenario config file")->required();
  run->add_option("--seed", run_seed, "Override the scenario's master seed");
  run->add_option("--trackers", run_trackers,
                  "Comma-separated tracker subset (kernel-sme, gnn, "
                  "oracle-kf, predict-only)");
  run->add_option("--out", run_out.path, "Write the report to this file");
  run->add_option("--format", run_out.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}));

  std::string bench_path;
  std::optional<std::uint64_t> bench_seed;
  std::string bench_counts = "5,10,20,40";
  OutputOptions bench_out;
  CLI::App* bench = app.add_subcommand(
      "bench", "Time the Kernel-SME update across target counts");
  bench->add_option("scenario", bench_path,
                    "Optional scenario file used as the model template");
  bench->add_option("--counts", bench_counts,
                    "Comma-separated target counts to time");
  bench->add_option("--seed", bench_seed, "Override the template's seed");
  bench->add_option("--out", bench_out.path, "Write the report to this file");
  bench->add_option("--format", bench_out.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}));

  std::uint64_t validate_seed = 42;
  std::size_t validate_samples = 1000000;
  int validate_cases = 4;
  OutputOptions validate_out;
  CLI::App* validate = app.add_subcommand(
      "validate-moments",
      "Check closed-form moments against the Monte Carlo oracle");
  validate->add_option("--seed", validate_seed, "Sweep seed");
  validate->add_option("--samples", validate_samples,
                       "Monte Carlo samples per case (>= 10000)");
  validate->add_option("--cases-per-combo", validate_cases,
                       "Randomized cases per (N, d) combination");
  validate->add_option("--out", validate_out.path,
                       "Write the report to this file");
  validate->add_option("--format", validate_out.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}));

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("ksme");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      ScenarioConfig cfg = parse_scenario_file(run_path);
      if (run_seed) cfg.seed = *run_seed;
      if (!run_trackers.empty()) {
        cfg.trackers.clear();
        for (const std::string& name : split_csv(run_trackers)) {
          cfg.trackers.push_back(parse_tracker(name));
        }
        if (cfg.trackers.empty()) {
          throw ConfigError("--trackers: expected a tracker list");
        }
      }
      const RunReport report = run_scenario(cfg);
      emit(report, run_out, out, &write_run_csv, &write_run_json);
      const int total = report.completed_runs + report.failed_runs;
      err << report.completed_runs << "/" << total << " runs completed\n";
      for (const std::string& failure : report.failures) {
        err << failure << '\n';
      }
      if (report.failed_runs * 20 > total) {
        err << "more than 5% of runs failed\n";
        return 3;
      }
      return 0;
    }
    if (bench->parsed()) {
      ScenarioConfig tmpl = bench_path.empty() ? default_bench_template()
                                               : parse_scenario_file(bench_path);
      if (bench_seed) tmpl.seed = *bench_seed;
      const BenchReport report =
          run_complexity_bench(tmpl, parse_counts(bench_counts));
      emit(report, bench_out, out, &write_bench_csv, &write_bench_json);
      return 0;
    }
    if (validate->parsed()) {
      const ValidationReport report = run_moment_validation(
          validate_seed, validate_samples, validate_cases);
      emit(report, validate_out, out, &write_validation_csv,
           &write_validation_json);
      if (!report.all_pass) {
        err << "moment validation failed\n";
        return 3;
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace ksme

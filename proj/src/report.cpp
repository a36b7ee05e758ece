#include <cstdio>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "ksme/harness.hpp"

namespace ksme {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ordered_json config_to_json(const ScenarioConfig& cfg) {
  ordered_json j;
  j["targets"] = cfg.targets;
  j["state_dim"] = cfg.state_dim;
  j["meas_dim"] = cfg.meas_dim;
  j["H"] = matrix_to_json(cfg.H);
  j["A"] = matrix_to_json(cfg.A);
  j["Cv"] = matrix_to_json(cfg.Cv);
  j["Cw"] = matrix_to_json(cfg.Cw);
  j["kernel_width"] = matrix_to_json(resolve_kernel(cfg).width);
  j["horizon"] = cfg.horizon;
  j["runs"] = cfg.runs;
  j["seed"] = cfg.seed;
  ordered_json init;
  init["cov"] = matrix_to_json(cfg.init_cov);
  switch (cfg.init_mean_mode) {
    case InitMeanMode::sample:
      init["mean_mode"] = "sample";
      break;
    case InitMeanMode::truth:
      init["mean_mode"] = "truth";
      break;
    case InitMeanMode::explicit_mean:
      init["mean_mode"] = "explicit";
      init["mean"] = vector_to_json(cfg.init_mean);
      break;
  }
  j["init"] = std::move(init);
  ordered_json truth;
  if (cfg.truth_circle) {
    truth["layout"] = "circle";
    truth["radius"] = cfg.truth_radius;
  } else {
    truth["layout"] = "explicit";
    truth["start"] = vector_to_json(cfg.truth_start);
  }
  j["truth"] = std::move(truth);
  j["ospa"] = {{"order", cfg.ospa.order}, {"cutoff", cfg.ospa.cutoff}};
  ordered_json names = ordered_json::array();
  for (TrackerKind kind : cfg.trackers) names.push_back(tracker_name(kind));
  j["trackers"] = std::move(names);
  return j;
}

}  // namespace

void write_run_csv(const RunReport& report, std::ostream& out) {
  out << "# schema=ksme.report.v1\n";
  out << "tracker,step,mean_ospa,se_ospa,runs\n";
  for (const TrackerCurve& curve : report.curves) {
    const std::string name = tracker_name(curve.kind);
    for (std::size_t step = 0; step < curve.mean_ospa.size(); ++step) {
      out << name << ',' << (step + 1) << ',' << fmt9(curve.mean_ospa[step])
          << ',' << fmt9(curve.se_ospa[step]) << ',' << report.completed_runs
          << '\n';
    }
  }
}

void write_run_json(const RunReport& report, std::ostream& out) {
  ordered_json j;
  j["schema"] = "ksme.report.v1";
  j["seed"] = report.config.seed;
  j["config"] = config_to_json(report.config);
  j["completed_runs"] = report.completed_runs;
  j["failed_runs"] = report.failed_runs;
  j["failures"] = report.failures;
  j["worst_eigenvalue_ratio"] = report.worst_eigenvalue_ratio;
  ordered_json curves = ordered_json::array();
  for (const TrackerCurve& curve : report.curves) {
    ordered_json c;
    c["tracker"] = tracker_name(curve.kind);
    c["mean_update_seconds"] = curve.mean_update_seconds;
    ordered_json steps = ordered_json::array();
    for (std::size_t step = 0; step < curve.mean_ospa.size(); ++step) {
      ordered_json s;
      s["step"] = step + 1;
      s["mean_ospa"] = curve.mean_ospa[step];
      s["se_ospa"] = curve.se_ospa[step];
      s["runs"] = report.completed_runs;
      steps.push_back(std::move(s));
    }
    c["steps"] = std::move(steps);
    curves.push_back(std::move(c));
  }
  j["trackers"] = std::move(curves);
  out << j.dump(2) << '\n';
}

void write_bench_csv(const BenchReport& report, std::ostream& out) {
  out << "# schema=ksme.bench.v1\n";
  out << "targets,median_update_seconds\n";
  for (const BenchRow& row : report.rows) {
    out << row.targets << ',' << fmt9(row.median_update_seconds) << '\n';
  }
  if (report.loglog_slope.has_value()) {
    out << "# loglog_slope=" << fmt9(*report.loglog_slope) << '\n';
  }
}

void write_bench_json(const BenchReport& report, std::ostream& out) {
  ordered_json j;
  j["schema"] = "ksme.bench.v1";
  ordered_json rows = ordered_json::array();
  for (const BenchRow& row : report.rows) {
    ordered_json r;
    r["targets"] = row.targets;
    r["median_update_seconds"] = row.median_update_seconds;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  if (report.loglog_slope.has_value()) {
    j["loglog_slope"] = *report.loglog_slope;
  } else {
    j["loglog_slope"] = nullptr;
  }
  out << j.dump(2) << '\n';
}

void write_validation_csv(const ValidationReport& report, std::ostream& out) {
  out << "# schema=ksme.validation.v1\n";
  out << "case,targets,state_dim,meas_dim,max_abs_z,pass\n";
  for (std::size_t i = 0; i < report.cases.size(); ++i) {
    const ValidationCase& c = report.cases[i];
    out << i << ',' << c.targets << ',' << c.state_dim << ',' << c.meas_dim
        << ',' << fmt9(c.max_abs_z) << ',' << (c.pass ? 1 : 0) << '\n';
  }
  out << "# samples=" << report.samples << '\n';
  out << "# all_pass=" << (report.all_pass ? 1 : 0) << '\n';
}

void write_validation_json(const ValidationReport& report, std::ostream& out) {
  ordered_json j;
  j["schema"] = "ksme.validation.v1";
  j["samples"] = report.samples;
  j["all_pass"] = report.all_pass;
  ordered_json cases = ordered_json::array();
  for (std::size_t i = 0; i < report.cases.size(); ++i) {
    const ValidationCase& c = report.cases[i];
    ordered_json entry;
    entry["case"] = i;
    entry["targets"] = c.targets;
    entry["state_dim"] = c.state_dim;
    entry["meas_dim"] = c.meas_dim;
    entry["max_abs_z"] = c.max_abs_z;
    entry["pass"] = c.pass;
    cases.push_back(std::move(entry));
  }
  j["cases"] = std::move(cases);
  out << j.dump(2) << '\n';
}

}  // namespace ksme

#include "ksme/scenario.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ksme/errors.hpp"
#include "ksme/linalg.hpp"

namespace ksme {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

struct RawConfig {
  std::map<std::string, std::string> values;
  std::set<std::string> consumed;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  const std::string* take(const std::string& key) {
    auto it = values.find(key);
    if (it == values.end()) return nullptr;
    consumed.insert(key);
    return &it->second;
  }

  void finish() const {
    for (const auto& [key, value] : values) {
      if (!consumed.count(key)) {
        throw ConfigError("unknown configuration key '" + key + "'");
      }
    }
  }
};

RawConfig tokenize(const std::string& text) {
  RawConfig raw;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected 'key = value'";
      throw ConfigError(msg.str());
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      std::ostringstream msg;
      msg << "line " << line_no << ": empty key or value";
      throw ConfigError(msg.str());
    }
    if (!raw.values.emplace(key, value).second) {
      throw ConfigError("duplicate configuration key '" + key + "'");
    }
  }
  return raw;
}

json parse_value(const std::string& key, const std::string& value) {
  json j = json::parse(value, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError(key + ": malformed value '" + value + "'");
  }
  return j;
}

double to_double(const std::string& key, const std::string& value) {
  const json j = parse_value(key, value);
  if (!j.is_number()) throw ConfigError(key + ": expected a number");
  return j.get<double>();
}

Eigen::Index to_positive_index(const std::string& key,
                               const std::string& value) {
  const json j = parse_value(key, value);
  if (!j.is_number_integer() || j.get<long long>() <= 0) {
    throw ConfigError(key + ": expected a positive integer");
  }
  return static_cast<Eigen::Index>(j.get<long long>());
}

std::uint64_t to_seed(const std::string& key, const std::string& value) {
  const json j = parse_value(key, value);
  if (!j.is_number_unsigned() && !(j.is_number_integer() &&
                                   j.get<long long>() >= 0)) {
    throw ConfigError(key + ": expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

Eigen::MatrixXd to_matrix(const std::string& key, const std::string& value,
                          Eigen::Index rows, Eigen::Index cols) {
  const json j = parse_value(key, value);
  if (j.is_number()) {
    return j.get<double>() * Eigen::MatrixXd::Identity(rows, cols);
  }
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    if (static_cast<Eigen::Index>(j.size()) != rows) {
      std::ostringstream msg;
      msg << key << ": expected " << rows << " rows, got " << j.size();
      throw ConfigError(msg.str());
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& row = j[static_cast<std::size_t>(r)];
      if (static_cast<Eigen::Index>(row.size()) != cols) {
        std::ostringstream msg;
        msg << key << ": row " << r << " has " << row.size()
            << " entries, expected " << cols;
        throw ConfigError(msg.str());
      }
      for (Eigen::Index c = 0; c < cols; ++c) {
        const auto& cell = row[static_cast<std::size_t>(c)];
        if (!cell.is_number()) {
          throw ConfigError(key + ": matrix entries must be numbers");
        }
        m(r, c) = cell.get<double>();
      }
    }
    return m;
  }
  throw ConfigError(key +
                    ": expected a scalar (scaled identity) or a row-list "
                    "matrix like [[a,b],[c,d]]");
}

Eigen::VectorXd to_stacked_vector(const std::string& key,
                                  const std::string& value, Eigen::Index count,
                                  Eigen::Index dim) {
  const json j = parse_value(key, value);
  if (!j.is_array() || j.empty()) {
    throw ConfigError(key + ": expected a list");
  }
  Eigen::VectorXd out(count * dim);
  if (j.front().is_array()) {
    if (static_cast<Eigen::Index>(j.size()) != count) {
      std::ostringstream msg;
      msg << key << ": expected " << count << " rows, got " << j.size();
      throw ConfigError(msg.str());
    }
    for (Eigen::Index r = 0; r < count; ++r) {
      const auto& row = j[static_cast<std::size_t>(r)];
      if (static_cast<Eigen::Index>(row.size()) != dim) {
        std::ostringstream msg;
        msg << key << ": row " << r << " has " << row.size()
            << " entries, expected " << dim;
        throw ConfigError(msg.str());
      }
      for (Eigen::Index c = 0; c < dim; ++c) {
        const auto& cell = row[static_cast<std::size_t>(c)];
        if (!cell.is_number()) {
          throw ConfigError(key + ": entries must be numbers");
        }
        out(r * dim + c) = cell.get<double>();
      }
    }
    return out;
  }
  if (static_cast<Eigen::Index>(j.size()) != count * dim) {
    std::ostringstream msg;
    msg << key << ": expected " << count * dim << " entries, got " << j.size();
    throw ConfigError(msg.str());
  }
  for (Eigen::Index i = 0; i < count * dim; ++i) {
    const auto& cell = j[static_cast<std::size_t>(i)];
    if (!cell.is_number()) {
      throw ConfigError(key + ": entries must be numbers");
    }
    out(i) = cell.get<double>();
  }
  return out;
}

void check_psd_key(const std::string& key, const Eigen::MatrixXd& m) {
  if (!is_symmetric(m, 1e-9)) {
    throw ConfigError(key + ": matrix is not symmetric");
  }
  const double scale = std::max(1.0, m.trace());
  if (min_eigenvalue(m) < -1e-9 * scale) {
    throw ConfigError(key + ": matrix is not positive semi-definite");
  }
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(value);
  while (std::getline(stream, item, ',')) {
    const std::string token = trim(item);
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

}  // namespace

std::string tracker_name(TrackerKind kind) {
  switch (kind) {
    case TrackerKind::kernel_sme:
      return "kernel-sme";
    case TrackerKind::gnn:
      return "gnn";
    case TrackerKind::oracle_kf:
      return "oracle-kf";
    case TrackerKind::predict_only:
      return "predict-only";
  }
  throw ConfigError("unrecognized tracker kind");
}

TrackerKind parse_tracker(const std::string& name) {
  if (name == "kernel-sme") return TrackerKind::kernel_sme;
  if (name == "gnn") return TrackerKind::gnn;
  if (name == "oracle-kf") return TrackerKind::oracle_kf;
  if (name == "predict-only") return TrackerKind::predict_only;
  throw ConfigError("unknown tracker '" + name +
                    "' (expected kernel-sme, gnn, oracle-kf, or predict-only)");
}

ScenarioConfig parse_scenario_text(const std::string& text) {
  RawConfig raw = tokenize(text);
  ScenarioConfig cfg;

  const auto require = [&raw](const std::string& key) -> const std::string& {
    const std::string* v = raw.take(key);
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return *v;
  };

  cfg.targets = to_positive_index("model.targets", require("model.targets"));
  cfg.state_dim =
      to_positive_index("model.state_dim", require("model.state_dim"));
  cfg.meas_dim = to_positive_index("model.meas_dim", require("model.meas_dim"));
  const Eigen::Index N = cfg.targets;
  const Eigen::Index n = cfg.state_dim;
  const Eigen::Index d = cfg.meas_dim;

  cfg.H = Eigen::MatrixXd::Identity(d, n);
  cfg.A = Eigen::MatrixXd::Identity(n, n);
  cfg.Cv = Eigen::MatrixXd::Zero(d, d);
  cfg.Cw = Eigen::MatrixXd::Zero(n, n);
  if (const auto* v = raw.take("model.H")) cfg.H = to_matrix("model.H", *v, d, n);
  if (const auto* v = raw.take("model.A")) cfg.A = to_matrix("model.A", *v, n, n);
  if (const auto* v = raw.take("model.Cv")) {
    cfg.Cv = to_matrix("model.Cv", *v, d, d);
    check_psd_key("model.Cv", cfg.Cv);
  }
  if (const auto* v = raw.take("model.Cw")) {
    cfg.Cw = to_matrix("model.Cw", *v, n, n);
    check_psd_key("model.Cw", cfg.Cw);
  }

  if (const auto* v = raw.take("kernel.width")) {
    if (*v == "cv") {
      cfg.kernel_from_cv = true;
    } else {
      cfg.kernel_from_cv = false;
      cfg.kernel_width = to_matrix("kernel.width", *v, d, d);
    }
  }

  cfg.horizon = static_cast<int>(
      to_positive_index("run.horizon", require("run.horizon")));
  cfg.runs = static_cast<int>(to_positive_index("run.runs", require("run.runs")));
  if (const auto* v = raw.take("run.seed")) cfg.seed = to_seed("run.seed", *v);

  cfg.init_cov = Eigen::MatrixXd::Identity(N * n, N * n);
  if (const auto* v = raw.take("init.cov")) {
    cfg.init_cov = to_matrix("init.cov", *v, N * n, N * n);
    check_psd_key("init.cov", cfg.init_cov);
  }

  const std::string* mean_mode = raw.take("init.mean_mode");
  const std::string* mean_value = raw.take("init.mean");
  if (mean_mode) {
    if (*mean_mode == "sample") {
      cfg.init_mean_mode = InitMeanMode::sample;
    } else if (*mean_mode == "truth") {
      cfg.init_mean_mode = InitMeanMode::truth;
    } else if (*mean_mode == "explicit") {
      cfg.init_mean_mode = InitMeanMode::explicit_mean;
    } else {
      throw ConfigError(
          "init.mean_mode: expected sample, truth, or explicit");
    }
  } else if (mean_value) {
    cfg.init_mean_mode = InitMeanMode::explicit_mean;
  }
  if (cfg.init_mean_mode == InitMeanMode::explicit_mean) {
    if (!mean_value) {
      throw ConfigError("init.mean_mode=explicit requires init.mean");
    }
    cfg.init_mean = to_stacked_vector("init.mean", *mean_value, N, n);
  } else if (mean_value) {
    throw ConfigError("init.mean requires init.mean_mode = explicit");
  }

  const std::string* layout = raw.take("truth.layout");
  const std::string* start = raw.take("truth.start");
  if (layout) {
    if (*layout == "circle") {
      cfg.truth_circle = true;
      if (start) {
        throw ConfigError("truth.start conflicts with truth.layout=circle");
      }
    } else if (*layout == "explicit") {
      cfg.truth_circle = false;
    } else {
      throw ConfigError("truth.layout: expected circle or explicit");
    }
  } else if (start) {
    cfg.truth_circle = false;
  }
  if (!cfg.truth_circle) {
    if (!start) throw ConfigError("truth.layout=explicit requires truth.start");
    cfg.truth_start = to_stacked_vector("truth.start", *start, N, n);
  }
  if (const auto* v = raw.take("truth.radius")) {
    cfg.truth_radius = to_double("truth.radius", *v);
    if (!(cfg.truth_radius >= 0) || !std::isfinite(cfg.truth_radius)) {
      throw ConfigError("truth.radius: expected a nonnegative number");
    }
  }

  if (const auto* v = raw.take("ospa.order")) {
    cfg.ospa.order = to_double("ospa.order", *v);
    if (!(cfg.ospa.order >= 1)) throw ConfigError("ospa.order must be >= 1");
  }
  if (const auto* v = raw.take("ospa.cutoff")) {
    cfg.ospa.cutoff = to_double("ospa.cutoff", *v);
    if (!(cfg.ospa.cutoff > 0)) throw ConfigError("ospa.cutoff must be positive");
  }

  cfg.trackers = {TrackerKind::kernel_sme, TrackerKind::gnn,
                  TrackerKind::oracle_kf, TrackerKind::predict_only};
  if (const auto* v = raw.take("trackers")) {
    cfg.trackers.clear();
    for (const std::string& name : split_list(*v)) {
      cfg.trackers.push_back(parse_tracker(name));
    }
    if (cfg.trackers.empty()) {
      throw ConfigError("trackers: expected a comma-separated tracker list");
    }
  }

  raw.finish();
  return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError("cannot open scenario file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_scenario_text(buffer.str());
}

LinearModelBank<double> build_bank(const ScenarioConfig& config) {
  SingleTargetModel<double> model{config.H, config.Cv, config.A, config.Cw};
  std::vector<SingleTargetModel<double>> targets(
      static_cast<std::size_t>(config.targets), model);
  return stack_models(std::move(targets));
}

KernelConfig<double> resolve_kernel(const ScenarioConfig& config) {
  if (config.kernel_from_cv) {
    return KernelConfig<double>{config.Cv};
  }
  return KernelConfig<double>{config.kernel_width};
}

Eigen::VectorXd truth_start_stacked(const ScenarioConfig& config) {
  const Eigen::Index N = config.targets;
  const Eigen::Index n = config.state_dim;
  if (!config.truth_circle) {
    return config.truth_start;
  }
  if (n < 2) {
    throw ConfigError(
        "truth.layout=circle requires state_dim >= 2; set truth.start");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(N * n);
  for (Eigen::Index l = 0; l < N; ++l) {
    const double angle =
        2.0 * 3.14159265358979323846 * static_cast<double>(l) /
        static_cast<double>(N);
    out(l * n + 0) = config.truth_radius * std::cos(angle);
    out(l * n + 1) = config.truth_radius * std::sin(angle);
  }
  return out;
}

}  // namespace ksme

#pragma once

#include "quadmpc/episode.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace quadmpc {

/// Mean of (reference - measured)^2 over one state channel.
inline double compute_mse(const TrajectoryLog& log, int channel = idx::vx) {
  if (log.empty()) throw Error(ErrorCode::EmptyLog, "cannot average an empty log");
  if (channel < 0 || channel >= kStateDim)
    throw Error(ErrorCode::DimensionMismatch, "channel index out of range");
  double sum = 0.0;
  for (const auto& r : log.rows) {
    const double e = r.reference(channel) - r.state(channel);
    sum += e * e;
  }
  return sum / static_cast<double>(log.size());
}

/// Diagnostic only: mean squared full-state error with identity weighting.
inline double compute_state_mse(const TrajectoryLog& log) {
  if (log.empty()) throw Error(ErrorCode::EmptyLog, "cannot average an empty log");
  double sum = 0.0;
  for (const auto& r : log.rows) sum += (r.reference - r.state).squaredNorm();
  return sum / static_cast<double>(log.size());
}

struct MetricsRow {
  std::string scenario;
  double frequency_hz = 0.0;
  double d_static_n = 0.0;
  double amplitude_n = 0.0;
  CompensationMode mode = CompensationMode::off;
  double mse_vx_x1000 = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  double diag_state_mse = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Shortest representation that round-trips; identical doubles always print identically.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::SchemaMismatch, "not a number: '" + std::string(s) + "'");
  return x;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<std::string> log_columns() {
  static const char* state_names[kStateDim] = {"roll", "pitch", "yaw", "px", "py", "pz",
                                               "wx", "wy", "wz", "vx", "vy", "vz"};
  static const char* legs[kNumLegs] = {"fl", "fr", "rl", "rr"};
  std::vector<std::string> cols{"t"};
  for (auto* n : state_names) cols.push_back(std::string(n));
  for (auto* n : state_names) cols.push_back(std::string("ref_") + n);
  for (auto* leg : legs)
    for (const char* axis : {"x", "y", "z"}) cols.push_back(std::string("f_") + leg + "_" + axis);
  for (const char* axis : {"x", "y", "z"}) cols.push_back(std::string("dist_") + axis);
  for (const char* n : {"xi_fx", "xi_fy", "xi_fz", "xi_tx", "xi_ty", "xi_tz"}) cols.push_back(n);
  for (const char* n : {"fc_fx", "fc_fy", "fc_fz", "fc_tx", "fc_ty", "fc_tz"}) cols.push_back(n);
  cols.push_back("failed");
  return cols;
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

}  // namespace detail

inline void write_log_csv(const TrajectoryLog& log, std::ostream& out) {
  out << detail::join(detail::log_columns()) << '\n';
  const std::string failed = log.failed ? "1" : "0";
  for (const auto& r : log.rows) {
    std::string line = detail::format_double(r.t);
    auto append = [&line](const auto& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        line += ',';
        line += detail::format_double(v(i));
      }
    };
    append(r.state);
    append(r.reference);
    append(r.grf);
    append(r.disturbance);
    append(r.xi);
    append(r.forecast);
    line += ',';
    line += failed;
    out << line << '\n';
  }
}

/// Inverse of write_log_csv. A failed episode with no rows cannot carry its flag and reads back as empty.
inline TrajectoryLog read_log_csv(std::istream& in) {
  const auto columns = detail::log_columns();
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line) != columns)
    throw Error(ErrorCode::SchemaMismatch, "unexpected trajectory log header");
  TrajectoryLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != columns.size())
      throw Error(ErrorCode::SchemaMismatch, "row has " + std::to_string(f.size()) + " fields");
    LogRow r;
    std::size_t c = 0;
    r.t = detail::parse_double(f[c++]);
    for (int i = 0; i < 12; ++i) r.state(i) = detail::parse_double(f[c++]);
    for (int i = 0; i < 12; ++i) r.reference(i) = detail::parse_double(f[c++]);
    for (int i = 0; i < 12; ++i) r.grf(i) = detail::parse_double(f[c++]);
    for (int i = 0; i < 3; ++i) r.disturbance(i) = detail::parse_double(f[c++]);
    for (int i = 0; i < 6; ++i) r.xi(i) = detail::parse_double(f[c++]);
    for (int i = 0; i < 6; ++i) r.forecast(i) = detail::parse_double(f[c++]);
    if (f[c] == "1") log.failed = true;
    else if (f[c] != "0") throw Error(ErrorCode::SchemaMismatch, "failed column must be 0 or 1");
    log.rows.push_back(r);
  }
  return log;
}

/// t, commanded v_x, measured v_x; one data row per log row.
inline void export_plot_data(const TrajectoryLog& log, std::ostream& out) {
  if (log.empty()) throw Error(ErrorCode::EmptyLog, "nothing to export");
  out << "t,vx_cmd,vx_meas\n";
  for (const auto& r : log.rows)
    out << detail::format_double(r.t) << ',' << detail::format_double(r.reference(idx::vx)) << ','
        << detail::format_double(r.state(idx::vx)) << '\n';
}

inline MetricsRow make_metrics_row(const ScenarioConfig& sc, CompensationMode mode, const TrajectoryLog& log) {
  MetricsRow row;
  row.scenario = sc.id;
  row.frequency_hz = sc.disturbance.frequency;
  row.d_static_n = sc.disturbance.d_static.dot(sc.disturbance.axis);
  row.amplitude_n = sc.disturbance.amplitude;
  row.mode = mode;
  row.failed = log.failed;
  if (!log.empty()) {
    row.mse_vx_x1000 = 1000.0 * compute_mse(log);
    row.diag_state_mse = compute_state_mse(log);
  }
  return row;
}

inline constexpr const char* kMatrixHeader =
    "scenario,frequency_hz,d_static_n,amplitude_n,mode,mse_vx_x1000,failed,diag_full_state_mse";

inline void write_matrix_csv(const std::vector<MetricsRow>& rows, std::ostream& out) {
  out << kMatrixHeader << '\n';
  for (const auto& r : rows)
    out << r.scenario << ',' << detail::format_double(r.frequency_hz) << ','
        << detail::format_double(r.d_static_n) << ',' << detail::format_double(r.amplitude_n) << ','
        << to_string(r.mode) << ',' << detail::format_double(r.mse_vx_x1000) << ',' << (r.failed ? 1 : 0)
        << ',' << detail::format_double(r.diag_state_mse) << '\n';
}

inline std::vector<MetricsRow> read_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMatrixHeader)
    throw Error(ErrorCode::SchemaMismatch, "unexpected matrix header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 8) throw Error(ErrorCode::SchemaMismatch, "matrix row needs 8 fields");
    MetricsRow r;
    r.scenario = f[0];
    r.frequency_hz = detail::parse_double(f[1]);
    r.d_static_n = detail::parse_double(f[2]);
    r.amplitude_n = detail::parse_double(f[3]);
    r.mode = parse_mode(f[4]);
    r.mse_vx_x1000 = detail::parse_double(f[5]);
    r.failed = f[6] == "1";
    r.diag_state_mse = detail::parse_double(f[7]);
    rows.push_back(r);
  }
  return rows;
}

/// Fixed-width summary with one line per scenario and one column per mode.
inline std::string format_metrics_table(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "scenario" << std::right << std::setw(8) << "f [Hz]" << std::setw(9)
      << "d [N]" << std::setw(9) << "A [N]";
  constexpr CompensationMode modes[] = {CompensationMode::off, CompensationMode::static_mean,
                                        CompensationMode::periodic};
  for (auto m : modes) out << std::setw(12) << to_string(m);
  out << '\n';
  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.scenario) == order.end()) order.push_back(r.scenario);
  for (const auto& id : order) {
    const MetricsRow* first = nullptr;
    for (const auto& r : rows)
      if (r.scenario == id) { first = &r; break; }
    out << std::left << std::setw(10) << id << std::right << std::fixed << std::setprecision(2) << std::setw(8)
        << first->frequency_hz << std::setw(9) << first->d_static_n << std::setw(9) << first->amplitude_n
        << std::setprecision(3);
    for (auto m : modes) {
      auto it = std::find_if(rows.begin(), rows.end(),
                             [&](const MetricsRow& r) { return r.scenario == id && r.mode == m; });
      if (it == rows.end()) out << std::setw(12) << "-";
      else if (it->failed) out << std::setw(12) << "FAILED";
      else out << std::setw(12) << it->mse_vx_x1000;
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Configuration

struct MatrixConfig {
  /// Controller, profile and simulator settings shared by every scenario.
  ScenarioConfig base;
  std::vector<ScenarioConfig> scenarios;
};

inline ScenarioConfig make_scenario(const ScenarioConfig& base, std::string id, double frequency,
                                    double d_static, double amplitude) {
  ScenarioConfig sc = base;
  sc.id = std::move(id);
  sc.disturbance.frequency = frequency;
  sc.disturbance.amplitude = amplitude;
  sc.disturbance.d_static = d_static * sc.disturbance.axis;
  return sc;
}

/// The six disturbance rows of the reference comparison, ids "1".."6".
inline std::vector<ScenarioConfig> default_scenarios(const ScenarioConfig& base = {}) {
  struct Row { double f, d, a; };
  constexpr Row rows[] = {{0.33, 0.0, 15.0}, {0.33, 0.0, 10.0},   {0.33, -10.0, 0.0},
                          {0.33, -7.0, 10.0}, {0.33, -10.0, 15.0}, {0.5, -10.0, 15.0}};
  std::vector<ScenarioConfig> out;
  int n = 1;
  for (const auto& r : rows) out.push_back(make_scenario(base, std::to_string(n++), r.f, r.d, r.a));
  return out;
}

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::ConfigParseError, where + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok) throw Error(ErrorCode::ConfigParseError, "unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_value(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

template <typename Derived>
void read_vector(const json& obj, const char* key, Eigen::MatrixBase<Derived>& target) {
  if (!obj.contains(key)) return;
  const auto values = obj.at(key).get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != target.size())
    throw Error(ErrorCode::ConfigParseError, std::string(key) + " needs " + std::to_string(target.size()) +
                                                 " entries");
  for (Eigen::Index i = 0; i < target.size(); ++i) target(i) = values[static_cast<std::size_t>(i)];
}

inline GaitKind parse_gait(const std::string& name) {
  if (name == "stand") return GaitKind::stand;
  if (name == "trot") return GaitKind::trot;
  throw Error(ErrorCode::ConfigParseError, "unknown gait '" + name + "'");
}

inline void apply_robot(const json& j, RobotParams& r) {
  check_keys(j, {"mass", "inertia", "mu", "fz_min", "fz_max", "gravity", "com_height", "hip_offsets"}, "robot");
  read_value(j, "mass", r.mass);
  read_vector(j, "inertia", r.inertia_diag);
  read_value(j, "mu", r.mu);
  read_value(j, "fz_min", r.fz_min);
  read_value(j, "fz_max", r.fz_max);
  read_vector(j, "gravity", r.gravity);
  read_value(j, "com_height", r.com_height);
  if (j.contains("hip_offsets")) {
    const auto& h = j.at("hip_offsets");
    if (!h.is_array() || h.size() != kNumLegs)
      throw Error(ErrorCode::ConfigParseError, "hip_offsets needs four 3-vectors");
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const auto v = h.at(static_cast<std::size_t>(leg)).get<std::vector<double>>();
      if (v.size() != 3) throw Error(ErrorCode::ConfigParseError, "hip offset needs 3 entries");
      r.hip_offsets[leg] = Vec3(v[0], v[1], v[2]);
    }
  }
}

inline void apply_gait(const json& j, ControllerConfig& c) {
  check_keys(j, {"period", "duty_factor", "phase_offsets", "reach_radius", "velocity_gain"}, "gait");
  read_value(j, "period", c.trot.period);
  read_value(j, "duty_factor", c.trot.duty_factor);
  if (j.contains("phase_offsets")) {
    const auto v = j.at("phase_offsets").get<std::vector<double>>();
    if (v.size() != kNumLegs) throw Error(ErrorCode::ConfigParseError, "phase_offsets needs 4 entries");
    std::copy(v.begin(), v.end(), c.trot.phase_offsets.begin());
  }
  read_value(j, "reach_radius", c.footholds.reach_radius);
  read_value(j, "velocity_gain", c.footholds.velocity_gain);
}

inline void apply_mpc(const json& j, ControllerConfig& c) {
  check_keys(j, {"state_weights", "effort_weight", "horizon", "dt", "qp_tolerance", "qp_max_iterations"}, "mpc");
  read_vector(j, "state_weights", c.mpc.state_weights);
  read_value(j, "effort_weight", c.mpc.effort_weight);
  read_value(j, "horizon", c.mpc.horizon);
  read_value(j, "dt", c.mpc.dt);
  read_value(j, "qp_tolerance", c.qp.tolerance);
  read_value(j, "qp_max_iterations", c.qp.max_iterations);
}

inline void apply_estimator(const json& j, ControllerConfig& c) {
  check_keys(j, {"weighting", "window", "f_min", "f_max", "f_step", "force_threshold", "torque_threshold",
                 "refit_interval", "static_continuous_mean", "progressive_grid"},
             "estimator");
  auto& e = c.estimator;
  if (j.contains("weighting")) {
    const auto& w = j.at("weighting");
    if (w.is_array() && w.size() == 6 && w.at(0).is_number()) {
      Vector6 diag;
      read_vector(j, "weighting", diag);
      e.weighting = diag.asDiagonal();
    } else {
      const auto m = w.get<std::vector<std::vector<double>>>();
      if (m.size() != 6) throw Error(ErrorCode::ConfigParseError, "weighting needs 6 rows");
      for (int r = 0; r < 6; ++r) {
        if (m[r].size() != 6) throw Error(ErrorCode::ConfigParseError, "weighting rows need 6 entries");
        for (int col = 0; col < 6; ++col) e.weighting(r, col) = m[r][col];
      }
    }
  }
  read_value(j, "window", e.window);
  read_value(j, "f_min", e.f_min);
  read_value(j, "f_max", e.f_max);
  read_value(j, "f_step", e.f_step);
  read_value(j, "force_threshold", e.force_threshold);
  read_value(j, "torque_threshold", e.torque_threshold);
  read_value(j, "refit_interval", c.refit_interval);
  read_value(j, "static_continuous_mean", c.static_continuous_mean);
  read_value(j, "progressive_grid", c.progressive_grid);
}

inline void apply_sim(const json& j, SimSettings& s) {
  check_keys(j, {"dt_sim", "state_noise_std"}, "sim");
  read_value(j, "dt_sim", s.dt_sim);
  read_value(j, "state_noise_std", s.state_noise_std);
}

inline VelocityProfile parse_profile(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ConfigParseError, "profile must be a list of segments");
  std::vector<ProfileSegment> segments;
  for (const auto& s : j) {
    check_keys(s, {"duration", "vx", "gait"}, "profile segment");
    ProfileSegment seg;
    seg.duration = s.at("duration").get<double>();
    read_value(s, "vx", seg.vx);
    if (s.contains("gait")) seg.gait = parse_gait(s.at("gait").get<std::string>());
    segments.push_back(seg);
  }
  return VelocityProfile(std::move(segments));
}

inline ScenarioConfig parse_scenario(const json& j, const ScenarioConfig& base, std::size_t position) {
  check_keys(j, {"id", "frequency", "d_static", "amplitude", "axis"}, "scenario");
  ScenarioConfig sc = base;
  sc.id = j.contains("id") ? j.at("id").get<std::string>() : std::to_string(position + 1);
  read_vector(j, "axis", sc.disturbance.axis);
  read_value(j, "frequency", sc.disturbance.frequency);
  read_value(j, "amplitude", sc.disturbance.amplitude);
  if (j.contains("d_static")) {
    const auto& d = j.at("d_static");
    if (d.is_number()) sc.disturbance.d_static = d.get<double>() * sc.disturbance.axis;
    else read_vector(j, "d_static", sc.disturbance.d_static);
  }
  return sc;
}

}  // namespace detail

/// Builds a matrix configuration from a JSON document; absent sections keep their defaults.
inline MatrixConfig parse_matrix_config(const std::string& text) {
  using nlohmann::json;
  MatrixConfig cfg;
  try {
    const json j = json::parse(text);
    detail::check_keys(j, {"seed", "robot", "gait", "mpc", "estimator", "sim", "profile", "scenarios"}, "config");
    auto& base = cfg.base;
    detail::read_value(j, "seed", base.seed);
    if (j.contains("robot")) detail::apply_robot(j.at("robot"), base.controller.robot);
    if (j.contains("gait")) detail::apply_gait(j.at("gait"), base.controller);
    if (j.contains("mpc")) detail::apply_mpc(j.at("mpc"), base.controller);
    if (j.contains("estimator")) detail::apply_estimator(j.at("estimator"), base.controller);
    base.controller.estimator.sample_period = base.controller.mpc.dt;
    if (j.contains("sim")) detail::apply_sim(j.at("sim"), base.sim);
    if (j.contains("profile")) base.profile = detail::parse_profile(j.at("profile"));
    if (j.contains("scenarios")) {
      const auto& list = j.at("scenarios");
      if (!list.is_array()) throw Error(ErrorCode::ConfigParseError, "scenarios must be a list");
      for (std::size_t i = 0; i < list.size(); ++i)
        cfg.scenarios.push_back(detail::parse_scenario(list.at(i), base, i));
    } else {
      cfg.scenarios = default_scenarios(base);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigParseError, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigParseError) throw;
    throw Error(ErrorCode::ConfigParseError, e.what());
  }
  for (std::size_t i = 0; i < cfg.scenarios.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (cfg.scenarios[i].id == cfg.scenarios[k].id)
        throw Error(ErrorCode::ConfigParseError, "duplicate scenario id '" + cfg.scenarios[i].id + "'");
  for (const auto& sc : cfg.scenarios) {
    try {
      sc.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigParseError, "scenario '" + sc.id + "': " + e.what());
    }
  }
  return cfg;
}

inline MatrixConfig load_matrix_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParseError, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_matrix_config(text.str());
}

// ---------------------------------------------------------------------------
// Batch runner

struct MatrixOptions {
  /// Output directory; empty skips all file output.
  std::filesystem::path out_dir;
  std::optional<std::string> scenario;
  std::optional<CompensationMode> mode;
  unsigned parallel = 1;
};

struct EpisodeResult {
  MetricsRow metrics;
  TrajectoryLog log;
};

inline std::string episode_stem(const std::string& id, CompensationMode mode) {
  return id + "_" + to_string(mode);
}

/**
 * @brief Runs every (scenario, mode) pair and collects the metrics.
 *
 * Rows come back in scenario order, then off / static / periodic, regardless
 * of how many worker threads ran them. With an output directory the matrix,
 * per-episode logs and plot series are written there.
 */
inline std::vector<MetricsRow> run_scenario_matrix(const MatrixConfig& cfg, const MatrixOptions& opts = {}) {
  struct Job {
    const ScenarioConfig* sc;
    CompensationMode mode;
  };
  std::vector<Job> jobs;
  for (const auto& sc : cfg.scenarios) {
    if (opts.scenario && sc.id != *opts.scenario) continue;
    for (auto m : {CompensationMode::off, CompensationMode::static_mean, CompensationMode::periodic}) {
      if (opts.mode && m != *opts.mode) continue;
      jobs.push_back({&sc, m});
    }
  }
  if (opts.scenario && jobs.empty())
    throw Error(ErrorCode::ConfigParseError, "no scenario with id '" + *opts.scenario + "'");

  if (!opts.out_dir.empty()) std::filesystem::create_directories(opts.out_dir);

  std::vector<MetricsRow> rows(jobs.size());
  auto run_job = [&](std::size_t i) {
    const auto& job = jobs[i];
    const TrajectoryLog log = run_episode(*job.sc, job.mode);
    rows[i] = make_metrics_row(*job.sc, job.mode, log);
    if (opts.out_dir.empty()) return;
    const std::string stem = episode_stem(job.sc->id, job.mode);
    std::ofstream episode(opts.out_dir / ("episode_" + stem + ".csv"));
    write_log_csv(log, episode);
    std::ofstream plot(opts.out_dir / ("plot_" + stem + ".csv"));
    if (log.empty()) plot << "t,vx_cmd,vx_meas\n";
    else export_plot_data(log, plot);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(opts.parallel, static_cast<unsigned>(jobs.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            run_job(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  if (!opts.out_dir.empty()) {
    std::ofstream matrix(opts.out_dir / "matrix.csv");
    write_matrix_csv(rows, matrix);
  }
  return rows;
}

/// Recomputes the metrics of every episode log in a results directory, in matrix order.
inline std::vector<MetricsRow> recompute_metrics(const std::filesystem::path& dir) {
  std::ifstream matrix_in(dir / "matrix.csv");
  if (!matrix_in) throw Error(ErrorCode::SchemaMismatch, "no matrix.csv in " + dir.string());
  auto rows = read_matrix_csv(matrix_in);
  for (auto& r : rows) {
    const auto path = dir / ("episode_" + episode_stem(r.scenario, r.mode) + ".csv");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::SchemaMismatch, "missing " + path.string());
    const TrajectoryLog log = read_log_csv(in);
    r.failed = r.failed || log.failed;
    if (log.empty()) {
      r.mse_vx_x1000 = std::numeric_limits<double>::quiet_NaN();
      r.diag_state_mse = std::numeric_limits<double>::quiet_NaN();
    } else {
      r.mse_vx_x1000 = 1000.0 * compute_mse(log);
      r.diag_state_mse = compute_state_mse(log);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Ordering checks against the reference comparison

struct OrderingCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline const MetricsRow* find_row(const std::vector<MetricsRow>& rows, double f, double d, double a,
                                  CompensationMode mode) {
  for (const auto& r : rows)
    if (std::abs(r.frequency_hz - f) < 1e-9 && std::abs(r.d_static_n - d) < 1e-9 &&
        std::abs(r.amplitude_n - a) < 1e-9 && r.mode == mode)
      return &r;
  return nullptr;
}

/**
 * @brief Closed-loop ordering, static-parity and frequency-trend checks.
 *
 * Scenarios are located by their (f, d, A) tuple; a missing or failed episode
 * fails the check that needs it.
 */
inline std::vector<OrderingCheck> check_orderings(const std::vector<MetricsRow>& rows) {
  using M = CompensationMode;
  std::vector<OrderingCheck> checks;
  auto fmt = [](double x) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << x;
    return s.str();
  };
  auto usable = [](const MetricsRow* r) { return r && !r->failed && std::isfinite(r->mse_vx_x1000); };

  struct Tuple { double f, d, a; };
  constexpr Tuple disturbed[] = {{0.33, 0.0, 15.0}, {0.33, 0.0, 10.0}, {0.33, -7.0, 10.0},
                                 {0.33, -10.0, 15.0}, {0.5, -10.0, 15.0}};
  for (const auto& s : disturbed) {
    OrderingCheck c;
    c.name = "ordering f=" + fmt(s.f) + " d=" + fmt(s.d) + " A=" + fmt(s.a);
    const auto* off = find_row(rows, s.f, s.d, s.a, M::off);
    const auto* st = find_row(rows, s.f, s.d, s.a, M::static_mean);
    const auto* pe = find_row(rows, s.f, s.d, s.a, M::periodic);
    if (!usable(off) || !usable(st) || !usable(pe)) {
      c.detail = "missing or failed episode";
    } else {
      const double gain = 1.0 - pe->mse_vx_x1000 / st->mse_vx_x1000;
      c.passed = pe->mse_vx_x1000 < st->mse_vx_x1000 && pe->mse_vx_x1000 < off->mse_vx_x1000 && gain >= 0.30;
      c.detail = "off " + fmt(off->mse_vx_x1000) + ", static " + fmt(st->mse_vx_x1000) + ", periodic " +
                 fmt(pe->mse_vx_x1000) + ", improvement over static " + fmt(100.0 * gain) + "% (need >= 30%)";
    }
    checks.push_back(c);
  }

  {
    OrderingCheck c;
    c.name = "static parity f=0.330 d=-10.000 A=0.000";
    const auto* off = find_row(rows, 0.33, -10.0, 0.0, M::off);
    const auto* st = find_row(rows, 0.33, -10.0, 0.0, M::static_mean);
    const auto* pe = find_row(rows, 0.33, -10.0, 0.0, M::periodic);
    if (!usable(off) || !usable(st) || !usable(pe)) {
      c.detail = "missing or failed episode";
    } else {
      const double best = std::min({off->mse_vx_x1000, st->mse_vx_x1000, pe->mse_vx_x1000});
      const double excess = pe->mse_vx_x1000 / best - 1.0;
      c.passed = excess <= 0.25;
      c.detail = "periodic " + fmt(pe->mse_vx_x1000) + " vs best " + fmt(best) + ", excess " +
                 fmt(100.0 * excess) + "% (limit 25%)";
    }
    checks.push_back(c);
  }

  {
    OrderingCheck c;
    c.name = "frequency trend 0.5 Hz vs 0.33 Hz (d=-10, A=15)";
    const auto* st_lo = find_row(rows, 0.33, -10.0, 15.0, M::static_mean);
    const auto* pe_lo = find_row(rows, 0.33, -10.0, 15.0, M::periodic);
    const auto* st_hi = find_row(rows, 0.5, -10.0, 15.0, M::static_mean);
    const auto* pe_hi = find_row(rows, 0.5, -10.0, 15.0, M::periodic);
    if (!usable(st_lo) || !usable(pe_lo) || !usable(st_hi) || !usable(pe_hi)) {
      c.detail = "missing or failed episode";
    } else {
      const double lo = st_lo->mse_vx_x1000 / pe_lo->mse_vx_x1000;
      const double hi = st_hi->mse_vx_x1000 / pe_hi->mse_vx_x1000;
      c.passed = hi >= lo;
      c.detail = "static/periodic " + fmt(hi) + "x at 0.5 Hz vs " + fmt(lo) + "x at 0.33 Hz";
    }
    checks.push_back(c);
  }
  return checks;
}

}  // namespace quadmpc

#pragma once

#include "quadmpc/dynamics.hpp"
#include "quadmpc/types.hpp"

#include <Eigen/LU>

#include <deque>
#include <vector>

namespace quadmpc {

struct EstimatorConfig {
  Matrix6 weighting = Matrix6::Identity();
  std::size_t window = 334;
  double sample_period = 0.03;
  double f_min = 0.2;
  double f_max = 2.0;
  double f_step = 0.01;
  double force_threshold = 1.0;
  double torque_threshold = 0.1;

  /// Samples needed for the window to cover two periods of the slowest candidate.
  std::size_t min_window() const {
    return 2 * static_cast<std::size_t>(std::ceil(1.0 / (f_min * sample_period) - 1e-9));
  }

  double min_span() const { return 2.0 / f_min; }

  int grid_size() const { return static_cast<int>(std::llround((f_max - f_min) / f_step)) + 1; }

  void validate() const {
    if (!(sample_period > 0.0)) throw Error(ErrorCode::InvalidTimestep, "sample period must be positive");
    if (!(f_min > 0.0 && f_max >= f_min && f_step > 0.0))
      throw Error(ErrorCode::InvalidParameter, "frequency grid must satisfy 0 < f_min <= f_max, f_step > 0");
    if (!weighting.isApprox(weighting.transpose()))
      throw Error(ErrorCode::InvalidParameter, "weighting must be symmetric");
    if (Eigen::LLT<Matrix6>(weighting).info() != Eigen::Success)
      throw Error(ErrorCode::InvalidParameter, "weighting must be positive definite");
    if (window < min_window())
      throw Error(ErrorCode::InsufficientWindow,
                  "window of " + std::to_string(window) + " samples is shorter than two periods of f_min (" +
                      std::to_string(min_window()) + ")");
  }
};

/**
 * @brief Weighted least-squares wrench from one observed transition.
 *
 * xi* = (Q' S Q)^-1 Q' S (x_next - A x - B u - G), with S weighting the six
 * rows of the residual that Q reaches (omega then v).
 */
inline Vector6 estimate_instant(const Vector12& x_next, const Vector12& x, const Eigen::VectorXd& u,
                                const DiscreteModel& model, const Matrix6& S) {
  if (u.size() != model.input_dim())
    throw Error(ErrorCode::DimensionMismatch, "input size does not match model");
  Vector12 residual = x_next - model.A * x - model.G;
  if (u.size() > 0) residual.noalias() -= model.B * u;

  const Matrix6 Qd = model.Q.bottomRows<6>();
  const Vector6 rd = residual.tail<6>();
  const Matrix6 normal = Qd.transpose() * S * Qd;
  Eigen::FullPivLU<Matrix6> lu(normal);
  lu.setThreshold(1e-14);
  if (!lu.isInvertible()) throw Error(ErrorCode::RankDeficient, "Q' S Q is singular");
  return lu.solve(Qd.transpose() * S * rd);
}

inline Disturbance estimate_instant(const State& x_next, const State& x, const Eigen::VectorXd& u,
                                    const DiscreteModel& model, const Matrix6& S) {
  return Disturbance::from_stacked(
      estimate_instant(x_next.to_vector(), x.to_vector(), u, model, S));
}

struct ResidualSample {
  double t = 0.0;
  Vector6 xi = Vector6::Zero();
};

/// Sliding window of the most recent residual estimates.
class ResidualHistory {
 public:
  explicit ResidualHistory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error(ErrorCode::InvalidParameter, "window capacity must be positive");
  }

  void push(double t, const Vector6& xi) {
    if (!std::isfinite(t) || !xi.allFinite())
      throw Error(ErrorCode::InvalidParameter, "non-finite residual sample");
    if (!samples_.empty() && !(t > samples_.back().t))
      throw Error(ErrorCode::NonMonotonicTime, "sample time must strictly increase");
    samples_.push_back({t, xi});
    if (samples_.size() > capacity_) samples_.pop_front();
  }

  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return samples_.empty(); }
  bool full() const { return samples_.size() == capacity_; }
  const std::deque<ResidualSample>& samples() const { return samples_; }

  /// Time covered by the window, counting one sample period for the last sample.
  double span(double sample_period) const {
    if (samples_.empty()) return 0.0;
    return samples_.back().t - samples_.front().t + sample_period;
  }

 private:
  std::size_t capacity_;
  std::deque<ResidualSample> samples_;
};

inline ResidualHistory push_sample(ResidualHistory history, double t, const Vector6& xi) {
  history.push(t, xi);
  return history;
}

inline Vector6 fit_static(const ResidualHistory& history) {
  if (history.empty()) throw Error(ErrorCode::EmptyWindow, "no samples to average");
  Vector6 sum = Vector6::Zero();
  for (const auto& s : history.samples()) sum += s.xi;
  return sum / static_cast<double>(history.size());
}

struct ChannelModel {
  double d_static = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;

  double evaluate(double t) const {
    if (amplitude == 0.0) return d_static;
    return d_static + amplitude * std::sin(2.0 * M_PI * frequency * t + phase);
  }
};

/// Per-channel d + A sin(2 pi f t + phi) over the six wrench channels.
struct PeriodicModel {
  std::array<ChannelModel, 6> channels{};

  static PeriodicModel constant(const Vector6& value) {
    PeriodicModel pm;
    for (int c = 0; c < 6; ++c) pm.channels[c].d_static = value(c);
    return pm;
  }

  Vector6 static_part() const {
    Vector6 d;
    for (int c = 0; c < 6; ++c) d(c) = channels[c].d_static;
    return d;
  }

  Vector6 evaluate(double t) const {
    Vector6 xi;
    for (int c = 0; c < 6; ++c) xi(c) = channels[c].evaluate(t);
    return xi;
  }
};

namespace detail {

struct SinusoidFit {
  double offset = 0.0;
  double sin_coeff = 0.0;
  double cos_coeff = 0.0;
  double rss = 0.0;
};

// Least squares of y against [1, sin, cos] given precomputed regressors.
inline SinusoidFit fit_offset_sinusoid(const Eigen::VectorXd& y, const Eigen::VectorXd& s,
                                       const Eigen::VectorXd& c) {
  const double n = static_cast<double>(y.size());
  Eigen::Matrix3d M;
  M << n, s.sum(), c.sum(),
       s.sum(), s.squaredNorm(), s.dot(c),
       c.sum(), s.dot(c), c.squaredNorm();
  const Eigen::Vector3d rhs(y.sum(), s.dot(y), c.dot(y));
  const Eigen::Vector3d beta = M.ldlt().solve(rhs);
  SinusoidFit fit{beta(0), beta(1), beta(2), 0.0};
  fit.rss = (y.array() - beta(0) - beta(1) * s.array() - beta(2) * c.array()).matrix().squaredNorm();
  return fit;
}

}  // namespace detail

/**
 * @brief Static plus sinusoidal decomposition of each channel of the window.
 *
 * Frequency: argmax over the grid of the least-squares periodogram (variance
 * explained by a sin/cos pair on top of a floating mean). Offset, amplitude and
 * phase come from one least-squares fit against [1, sin, cos] at that frequency.
 * Channels whose amplitude falls below threshold are reported as the window mean.
 */
inline PeriodicModel fit_periodic(const ResidualHistory& history, const EstimatorConfig& config) {
  if (history.size() < 3 || history.span(config.sample_period) < config.min_span() * (1.0 - 1e-9))
    throw Error(ErrorCode::InsufficientWindow, "window spans fewer than two periods of f_min");

  const auto& samples = history.samples();
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  Eigen::VectorXd t(n);
  Eigen::Matrix<double, Eigen::Dynamic, 6> y(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i) = samples[static_cast<std::size_t>(i)].t;
    y.row(i) = samples[static_cast<std::size_t>(i)].xi.transpose();
  }
  const Vector6 mean = y.colwise().mean().transpose();

  const int grid = config.grid_size();
  std::array<double, 6> best_power;
  std::array<double, 6> best_freq;
  best_power.fill(-1.0);
  best_freq.fill(config.f_min);
  std::array<Eigen::VectorXd, 6> centered;
  std::array<double, 6> total_ss;
  for (int c = 0; c < 6; ++c) {
    centered[c] = y.col(c).array() - mean(c);
    total_ss[c] = centered[c].squaredNorm();
  }

  Eigen::VectorXd s(n), co(n);
  for (int j = 0; j < grid; ++j) {
    const double f = config.f_min + j * config.f_step;
    const Eigen::ArrayXd phase = 2.0 * M_PI * f * t.array();
    s = phase.sin().matrix();
    co = phase.cos().matrix();
    for (int c = 0; c < 6; ++c) {
      const auto fit = detail::fit_offset_sinusoid(centered[c], s, co);
      const double power = total_ss[c] - fit.rss;
      if (power > best_power[c]) {
        best_power[c] = power;
        best_freq[c] = f;
      }
    }
  }

  PeriodicModel pm;
  for (int c = 0; c < 6; ++c) {
    const double f = best_freq[c];
    const Eigen::ArrayXd phase = 2.0 * M_PI * f * t.array();
    s = phase.sin().matrix();
    co = phase.cos().matrix();
    const auto fit = detail::fit_offset_sinusoid(centered[c], s, co);
    const double amplitude = std::hypot(fit.sin_coeff, fit.cos_coeff);
    const double threshold = c < 3 ? config.force_threshold : config.torque_threshold;
    auto& ch = pm.channels[c];
    if (amplitude < threshold) {
      ch = ChannelModel{mean(c), 0.0, 0.0, 0.0};
      continue;
    }
    ch.d_static = mean(c) + fit.offset;
    ch.amplitude = amplitude;
    ch.frequency = f;
    double phi = std::atan2(fit.cos_coeff, fit.sin_coeff);
    if (phi < 0.0) phi += 2.0 * M_PI;
    ch.phase = phi;
  }
  return pm;
}

enum class CompensationMode { off, static_mean, periodic };

inline const char* to_string(CompensationMode mode) {
  switch (mode) {
    case CompensationMode::off: return "off";
    case CompensationMode::static_mean: return "static";
    case CompensationMode::periodic: return "periodic";
  }
  return "off";
}

inline CompensationMode parse_mode(const std::string& name) {
  if (name == "off" || name == "baseline") return CompensationMode::off;
  if (name == "static") return CompensationMode::static_mean;
  if (name == "periodic") return CompensationMode::periodic;
  throw Error(ErrorCode::ConfigParseError, "unknown compensation mode '" + name + "'");
}

/// Disturbance sequence over the horizon: step i is evaluated at t0 + i * dt.
inline std::vector<Vector6> forecast(const PeriodicModel& pm, double t0, int k, double dt,
                                     CompensationMode mode) {
  std::vector<Vector6> xs(static_cast<std::size_t>(std::max(k, 0)), Vector6::Zero());
  if (mode == CompensationMode::off) return xs;
  if (mode == CompensationMode::static_mean) {
    const Vector6 d = pm.static_part();
    for (auto& x : xs) x = d;
    return xs;
  }
  for (int i = 0; i < k; ++i) xs[i] = pm.evaluate(t0 + i * dt);
  return xs;
}

}  // namespace quadmpc

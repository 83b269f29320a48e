#pragma once

#include "quadmpc/estimator.hpp"
#include "quadmpc/gait.hpp"
#include "quadmpc/mpc.hpp"
#include "quadmpc/sim.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace quadmpc {

struct ProfileSegment {
  double duration = 0.0;
  double vx = 0.0;
  GaitKind gait = GaitKind::stand;
};

/// Piecewise-constant forward-velocity command.
class VelocityProfile {
 public:
  VelocityProfile() = default;
  explicit VelocityProfile(std::vector<ProfileSegment> segments) : segments_(std::move(segments)) {
    validate();
  }

  /// Stand at 0 m/s, trot at 0.3 m/s, trot at 0.6 m/s; 10 s each.
  static VelocityProfile three_regimes() {
    return VelocityProfile({{10.0, 0.0, GaitKind::stand},
                            {10.0, 0.3, GaitKind::trot},
                            {10.0, 0.6, GaitKind::trot}});
  }

  void validate() const {
    if (segments_.empty()) throw Error(ErrorCode::InvalidParameter, "velocity profile is empty");
    for (const auto& s : segments_)
      if (!(s.duration > 0.0) || !std::isfinite(s.vx))
        throw Error(ErrorCode::InvalidParameter, "profile segments need positive duration");
  }

  const std::vector<ProfileSegment>& segments() const { return segments_; }

  double duration() const {
    double total = 0.0;
    for (const auto& s : segments_) total += s.duration;
    return total;
  }

  /// Segment active at t; times past the end map to the last segment.
  std::size_t segment_index(double t) const {
    double start = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      start += segments_[i].duration;
      if (t < start) return i;
    }
    return segments_.size() - 1;
  }

  const ProfileSegment& segment_at(double t) const { return segments_[segment_index(t)]; }

  double commanded_vx(double t) const { return segment_at(t).vx; }

  /// Integral of the commanded velocity from 0 to t (continuous across segments).
  double position_x(double t) const {
    double x = 0.0;
    double start = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const double end = start + segments_[i].duration;
      const bool last = i + 1 == segments_.size();
      if (t < end || last) return x + segments_[i].vx * (t - start);
      x += segments_[i].vx * segments_[i].duration;
      start = end;
    }
    return x;
  }

 private:
  std::vector<ProfileSegment> segments_;
};

/// Anchor of the reference trajectory: episode start position and held yaw.
struct ReferenceAnchor {
  Vec3 origin = Vec3::Zero();
  double yaw = 0.0;
  double height = 0.28;
};

inline Vector12 reference_state(const VelocityProfile& profile, double t, const ReferenceAnchor& anchor) {
  State s;
  s.theta = Vec3(0.0, 0.0, anchor.yaw);
  const Mat3 Rz = rotation_yaw(anchor.yaw);
  const Vec3 forward = Rz * Vec3::UnitX();
  s.p = anchor.origin + profile.position_x(t) * forward;
  s.p.z() = anchor.height;
  s.v = profile.commanded_vx(t) * forward;
  return s.to_vector();
}

/// Targets for x_1..x_k of an MPC solve started at time t.
inline ReferenceTrajectory generate_reference(const VelocityProfile& profile, double t, int k,
                                              double dt_mpc, const ReferenceAnchor& anchor) {
  if (!(t >= 0.0) || t > profile.duration())
    throw Error(ErrorCode::TimeOutOfRange, "t = " + std::to_string(t) + " outside velocity profile");
  ReferenceTrajectory ref;
  ref.reserve(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) ref.push_back(reference_state(profile, t + i * dt_mpc, anchor));
  return ref;
}

struct ControllerConfig {
  RobotParams robot;
  MpcWeights mpc;
  QpSettings qp;
  EstimatorConfig estimator;
  GaitSpec trot = GaitSpec::trot();
  FootholdParams footholds;
  /// Re-run fit_periodic after this much simulated time.
  double refit_interval = 0.1;
  /// Static mode keeps updating the window mean instead of freezing after the first full window.
  bool static_continuous_mean = false;
  /// Before the window covers two periods of f_min, fit over the part of the grid it
  /// already covers instead of falling back to the window mean.
  bool progressive_grid = true;

  GaitSpec gait_for(GaitKind kind) const { return kind == GaitKind::trot ? trot : GaitSpec::stand(); }
};

struct SimSettings {
  double dt_sim = 1e-3;
  /// Standard deviation of additive noise on the measured state; zero keeps runs noise-free.
  double state_noise_std = 0.0;
};

struct ScenarioConfig {
  std::string id = "0";
  DisturbanceSpec disturbance;
  VelocityProfile profile = VelocityProfile::three_regimes();
  ControllerConfig controller;
  SimSettings sim;
  std::uint64_t seed = 0;

  void validate() const {
    disturbance.validate();
    profile.validate();
    controller.robot.validate();
    controller.mpc.validate();
    controller.estimator.validate();
    controller.trot.validate();
    if (!(sim.dt_sim > 0.0) || sim.dt_sim > 1e-3 + 1e-15)
      throw Error(ErrorCode::InvalidTimestep, "dt_sim must lie in (0, 1e-3]");
    const double ratio = controller.mpc.dt / sim.dt_sim;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
      throw Error(ErrorCode::InvalidTimestep, "dt_sim must divide dt_mpc evenly");
    if (std::abs(controller.estimator.sample_period - controller.mpc.dt) > 1e-12)
      throw Error(ErrorCode::InvalidParameter, "estimator samples once per MPC step");
    if (!(sim.state_noise_std >= 0.0))
      throw Error(ErrorCode::InvalidParameter, "noise level must be nonnegative");
  }
};

}  // namespace quadmpc

#pragma once

#include "quadmpc/dynamics.hpp"
#include "quadmpc/types.hpp"

namespace quadmpc {

/// Linear force d_static + amplitude * sin(2 pi f t) * axis, applied at the CoM.
struct DisturbanceSpec {
  Vec3 d_static = Vec3::Zero();
  double amplitude = 0.0;
  double frequency = 0.0;
  Vec3 axis = Vec3::UnitX();

  void validate() const {
    if (!(frequency >= 0.0)) throw Error(ErrorCode::InvalidParameter, "frequency must be nonnegative");
    if (std::abs(axis.norm() - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidParameter, "disturbance axis must be a unit vector");
    if (!d_static.allFinite() || !std::isfinite(amplitude))
      throw Error(ErrorCode::InvalidParameter, "disturbance must be finite");
  }
};

inline Vec3 apply_disturbance(const DisturbanceSpec& spec, double t) {
  return spec.d_static + spec.amplitude * std::sin(2.0 * M_PI * spec.frequency * t) * spec.axis;
}

struct TruthOptions {
  /// Keep the omega x I omega term; switched off only to compare against the linear model.
  bool gyroscopic = true;
};

inline constexpr double kBlowupLimit = 1e6;

/**
 * @brief One semi-implicit Euler step of the full single-rigid-body dynamics.
 *
 * Forces are world-frame and act at the world-frame footholds. Velocities are
 * updated first; position and Euler angles then integrate the new velocities.
 */
inline State step_truth(const State& x, const FootArray& foot_forces, const FootArray& footholds,
                        const Vec3& ext_force, const RobotParams& params, double dt_sim,
                        const TruthOptions& options = {}) {
  if (!(dt_sim > 0.0)) throw Error(ErrorCode::InvalidTimestep, "dt_sim must be positive");

  Vec3 force_sum = ext_force;
  Vec3 torque_world = Vec3::Zero();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    force_sum += foot_forces[leg];
    torque_world += (footholds[leg] - x.p).cross(foot_forces[leg]);
  }

  const Mat3 R = rotation_world_body(x.theta);
  const Vec3 torque_body = R.transpose() * torque_world;
  const Vec3& I = params.inertia_diag;
  Vec3 omega_dot = torque_body;
  if (options.gyroscopic) omega_dot -= x.omega.cross(I.cwiseProduct(x.omega));
  omega_dot = omega_dot.cwiseQuotient(I);

  State next;
  next.v = x.v + dt_sim * (params.gravity + force_sum / params.mass);
  next.omega = x.omega + dt_sim * omega_dot;
  next.p = x.p + dt_sim * next.v;
  next.theta = x.theta + dt_sim * euler_rate_transform(x.theta) * next.omega;

  const Vector12 flat = next.to_vector();
  if (!flat.allFinite() || flat.cwiseAbs().maxCoeff() > kBlowupLimit)
    throw Error(ErrorCode::NumericalBlowup, "state magnitude exceeded limit");
  return next;
}

}  // namespace quadmpc

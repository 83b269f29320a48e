#pragma once

#include "quadmpc/types.hpp"

#include <Eigen/Geometry>

#include <span>
#include <vector>

#ifndef QUADMPC_BARE_IDENTITY_QD
#define QUADMPC_BARE_IDENTITY_QD 0
#endif

namespace quadmpc {

struct RobotParams {
  double mass = 12.0;
  Vec3 inertia_diag{0.07, 0.26, 0.24};
  double mu = 0.6;
  double fz_min = 0.0;
  double fz_max = 200.0;
  Vec3 gravity{0.0, 0.0, -9.81};
  double com_height = 0.28;
  // Nominal foot positions relative to the CoM, body frame, legs in FL, FR, RL, RR order.
  FootArray hip_offsets{Vec3{0.18, 0.13, -0.28}, Vec3{0.18, -0.13, -0.28},
                        Vec3{-0.18, 0.13, -0.28}, Vec3{-0.18, -0.13, -0.28}};

  Mat3 inertia() const { return inertia_diag.asDiagonal(); }
  Mat3 inertia_inverse() const { return inertia_diag.cwiseInverse().asDiagonal(); }

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass))
      throw Error(ErrorCode::InvalidParameter, "mass must be positive");
    if (!((inertia_diag.array() > 0.0).all()) || !inertia_diag.allFinite())
      throw Error(ErrorCode::SingularInertia, "inertia diagonal must be strictly positive");
    if (!(mu > 0.0)) throw Error(ErrorCode::InvalidParameter, "friction coefficient must be positive");
    if (!(fz_min >= 0.0 && fz_min < fz_max))
      throw Error(ErrorCode::InvalidParameter, "require 0 <= fz_min < fz_max");
    if (!gravity.allFinite()) throw Error(ErrorCode::InvalidParameter, "gravity must be finite");
  }
};

/// How the disturbance map Q_d scales xi.
enum class DisturbanceScaling {
  /// xi in newtons / newton-metres: torque rows -dt*I^-1, force rows -dt/m.
  physical,
  /// Unscaled [0; identity] map: xi is a per-step velocity increment.
  bare_identity,
};

inline constexpr DisturbanceScaling kDefaultDisturbanceScaling =
    QUADMPC_BARE_IDENTITY_QD ? DisturbanceScaling::bare_identity : DisturbanceScaling::physical;

/// Stance flag plus CoM-to-foot vector for one leg.
struct FootContact {
  bool stance = false;
  Vec3 r = Vec3::Zero();
};

/**
 * @brief Linear one-step model x+ = A x + B u + G + Q xi.
 *
 * B has 3 columns per stance foot, in leg order; stance_legs records which
 * leg each column block belongs to.
 */
struct DiscreteModel {
  Matrix12 A = Matrix12::Identity();
  Eigen::MatrixXd B;
  Vector12 G = Vector12::Zero();
  Eigen::Matrix<double, 12, 6> Q = Eigen::Matrix<double, 12, 6>::Zero();
  double dt = 0.0;
  std::vector<int> stance_legs;

  int contact_count() const { return static_cast<int>(stance_legs.size()); }
  int input_dim() const { return 3 * contact_count(); }
};

inline constexpr double kGimbalMargin = 1e-3;

/**
 * @brief ZYX Euler-rate matrix: theta_dot = T(theta) * omega_body.
 *
 * theta = (roll, pitch, yaw). Singular at |pitch| = pi/2.
 */
inline Mat3 euler_rate_transform(const Vec3& theta) {
  const double roll = theta.x();
  const double pitch = theta.y();
  if (!theta.allFinite() || std::abs(pitch) >= M_PI / 2.0 - kGimbalMargin)
    throw Error(ErrorCode::GimbalLock, "pitch too close to +/- pi/2");
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double tp = std::tan(pitch), cp = std::cos(pitch);
  Mat3 T;
  T << 1.0, sr * tp, cr * tp,
       0.0, cr, -sr,
       0.0, sr / cp, cr / cp;
  return T;
}

/// R_wb = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 rotation_world_body(const Vec3& theta) {
  return (Eigen::AngleAxisd(theta.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(theta.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(theta.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

inline Mat3 rotation_yaw(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

inline Eigen::Matrix<double, 12, 6> disturbance_map(const RobotParams& params, double dt,
                                                    DisturbanceScaling scaling) {
  Eigen::Matrix<double, 12, 6> Q = Eigen::Matrix<double, 12, 6>::Zero();
  if (scaling == DisturbanceScaling::physical) {
    // Force channels (xi 0..2) drive v, torque channels (xi 3..5) drive omega.
    Q.block<3, 3>(idx::v, 0) = -(dt / params.mass) * Mat3::Identity();
    Q.block<3, 3>(idx::omega, 3) = -dt * params.inertia_inverse();
  } else {
    Q.block<3, 3>(idx::v, 0) = Mat3::Identity();
    Q.block<3, 3>(idx::omega, 3) = Mat3::Identity();
  }
  return Q;
}

/**
 * @brief Builds the small-angle, diagonal-inertia discretization for one step.
 *
 * Foot vectors are CoM-to-foot in the world frame; swing feet contribute no columns.
 */
inline DiscreteModel build_discrete_model(const RobotParams& params, const Vec3& theta,
                                          std::span<const FootContact> contacts, double dt,
                                          DisturbanceScaling scaling = kDefaultDisturbanceScaling) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorCode::InvalidTimestep, "dt must be positive");
  if (!((params.inertia_diag.array() > 0.0).all()))
    throw Error(ErrorCode::SingularInertia, "inertia diagonal must be strictly positive");
  if (!(params.mass > 0.0)) throw Error(ErrorCode::InvalidParameter, "mass must be positive");

  DiscreteModel model;
  model.dt = dt;
  model.A.block<3, 3>(idx::theta, idx::omega) = euler_rate_transform(theta) * dt;
  model.A.block<3, 3>(idx::p, idx::v) = Mat3::Identity() * dt;

  for (std::size_t leg = 0; leg < contacts.size(); ++leg)
    if (contacts[leg].stance) model.stance_legs.push_back(static_cast<int>(leg));

  const Mat3 inertia_inv = params.inertia_inverse();
  model.B = Eigen::MatrixXd::Zero(kStateDim, model.input_dim());
  for (int c = 0; c < model.contact_count(); ++c) {
    const Vec3& r = contacts[model.stance_legs[c]].r;
    model.B.block<3, 3>(idx::omega, 3 * c) = inertia_inv * skew(r) * dt;
    model.B.block<3, 3>(idx::v, 3 * c) = Mat3::Identity() * (dt / params.mass);
  }

  model.G.segment<3>(idx::v) = params.gravity * dt;
  model.Q = disturbance_map(params, dt, scaling);
  return model;
}

/// Affine one-step prediction x+ = A x + B u + G + Q xi.
inline Vector12 predict_next_state(const DiscreteModel& model, const Vector12& x,
                                   const Eigen::VectorXd& u, const Vector6& xi) {
  if (u.size() != model.input_dim())
    throw Error(ErrorCode::DimensionMismatch,
                "input has " + std::to_string(u.size()) + " entries, model expects " +
                    std::to_string(model.input_dim()));
  Vector12 next = model.A * x + model.G + model.Q * xi;
  if (u.size() > 0) next.noalias() += model.B * u;
  return next;
}

inline State predict_next_state(const DiscreteModel& model, const State& x,
                                const Eigen::VectorXd& u, const Disturbance& xi) {
  return State::from_vector(predict_next_state(model, x.to_vector(), u, xi.stacked()));
}

}  // namespace quadmpc

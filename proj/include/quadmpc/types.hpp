#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace quadmpc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector12 = Eigen::Matrix<double, 12, 1>;
using Matrix12 = Eigen::Matrix<double, 12, 12>;

inline constexpr int kStateDim = 12;
inline constexpr int kNumLegs = 4;

/// Leg order used everywhere: front-left, front-right, rear-left, rear-right.
enum Leg : int { FL = 0, FR = 1, RL = 2, RR = 3 };

using FootArray = std::array<Vec3, kNumLegs>;

enum class ErrorCode {
  GimbalLock,
  InvalidTimestep,
  SingularInertia,
  InvalidParameter,
  DimensionMismatch,
  InfeasibleBounds,
  RankDeficient,
  NonMonotonicTime,
  EmptyWindow,
  InsufficientWindow,
  NumericalBlowup,
  TimeOutOfRange,
  EmptyLog,
  ConfigParseError,
  SchemaMismatch,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::GimbalLock: return "GimbalLock";
    case ErrorCode::InvalidTimestep: return "InvalidTimestep";
    case ErrorCode::SingularInertia: return "SingularInertia";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InfeasibleBounds: return "InfeasibleBounds";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::InsufficientWindow: return "InsufficientWindow";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::ConfigParseError: return "ConfigParseError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/**
 * @brief Floating-base state: ZYX Euler angles (roll, pitch, yaw), CoM position,
 * body-frame angular velocity and CoM linear velocity.
 *
 * Vector layout is [theta, p, omega, v].
 */
struct State {
  Vec3 theta = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  Vec3 v = Vec3::Zero();

  Vector12 to_vector() const {
    Vector12 x;
    x << theta, p, omega, v;
    return x;
  }

  static State from_vector(const Vector12& x) {
    State s;
    s.theta = x.segment<3>(0);
    s.p = x.segment<3>(3);
    s.omega = x.segment<3>(6);
    s.v = x.segment<3>(9);
    return s;
  }

  bool is_finite() const { return to_vector().allFinite(); }
};

/// Index helpers into the 12-vector.
namespace idx {
inline constexpr int theta = 0;
inline constexpr int p = 3;
inline constexpr int omega = 6;
inline constexpr int v = 9;
inline constexpr int vx = 9;
}  // namespace idx

/// External wrench stacked as xi = [f_unk; t_unk].
struct Disturbance {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  Vector6 stacked() const {
    Vector6 xi;
    xi << force, torque;
    return xi;
  }

  static Disturbance from_stacked(const Vector6& xi) {
    return {xi.head<3>(), xi.tail<3>()};
  }
};

inline Mat3 skew(const Vec3& r) {
  Mat3 s;
  s << 0.0, -r.z(), r.y(),
       r.z(), 0.0, -r.x(),
       -r.y(), r.x(), 0.0;
  return s;
}

}  // namespace quadmpc

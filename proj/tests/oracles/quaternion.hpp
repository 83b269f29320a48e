#pragma once

// Orientation propagation through unit quaternions, used to check the Euler-rate map.

#include <Eigen/Geometry>

#include <algorithm>

#include <cmath>

namespace oracle {

/// Exact attitude after spinning at constant body rate omega for time t.
inline Eigen::Quaterniond propagate_body_rate(const Eigen::Quaterniond& q0, const Eigen::Vector3d& omega,
                                              double t) {
  const double angle = omega.norm() * t;
  if (angle == 0.0) return q0;
  return (q0 * Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega.normalized()))).normalized();
}

/// (roll, pitch, yaw) of R = Rz(yaw) Ry(pitch) Rx(roll).
inline Eigen::Vector3d zyx_angles(const Eigen::Matrix3d& R) {
  return {std::atan2(R(2, 1), R(2, 2)), -std::asin(std::clamp(R(2, 0), -1.0, 1.0)), std::atan2(R(1, 0), R(0, 0))};
}

inline Eigen::Quaterniond from_zyx(const Eigen::Vector3d& theta) {
  return Eigen::AngleAxisd(theta.z(), Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(theta.y(), Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(theta.x(), Eigen::Vector3d::UnitX());
}

}  // namespace oracle

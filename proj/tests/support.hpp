#pragma once

#include "quadmpc.hpp"

#include <random>

namespace testing_support {

using namespace quadmpc;

inline State standing_state(const RobotParams& params) {
  State x;
  x.p = Vec3(0.0, 0.0, params.com_height);
  return x;
}

/// All four feet planted under the hips for every horizon step.
inline ContactPlan standing_plan(const RobotParams& params, int k) {
  ContactPlan plan;
  for (int i = 0; i < k; ++i) {
    plan.stance.push_back({true, true, true, true});
    plan.foot_vectors.push_back(params.hip_offsets);
  }
  return plan;
}

inline ContactPlan trot_plan(const RobotParams& params, int k, double t, double dt) {
  ContactPlan plan;
  plan.stance = schedule_contacts(GaitSpec::trot(), t, k, dt);
  for (int i = 0; i < k; ++i) plan.foot_vectors.push_back(params.hip_offsets);
  return plan;
}

inline ReferenceTrajectory hold(const State& x, int k) { return ReferenceTrajectory(k, x.to_vector()); }

inline std::vector<Vector6> zero_forecast(int k) { return std::vector<Vector6>(k, Vector6::Zero()); }

inline Vec3 random_vec3(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

/// Random state with moderate attitude, well away from the pitch singularity.
inline State random_state(std::mt19937_64& rng) {
  State x;
  x.theta = random_vec3(rng, 0.4);
  x.p = random_vec3(rng, 1.0);
  x.omega = random_vec3(rng, 2.0);
  x.v = random_vec3(rng, 1.5);
  return x;
}

inline std::array<FootContact, kNumLegs> random_contacts(std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.6);
  std::array<FootContact, kNumLegs> c;
  for (auto& f : c) {
    f.stance = coin(rng);
    f.r = random_vec3(rng, 0.3);
  }
  return c;
}

inline Vector6 random_xi(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector6 xi;
  for (int i = 0; i < 3; ++i) xi(i) = 30.0 * u(rng);
  for (int i = 3; i < 6; ++i) xi(i) = 3.0 * u(rng);
  return xi;
}

inline Eigen::VectorXd random_input(std::mt19937_64& rng, int size) {
  std::uniform_real_distribution<double> u(-40.0, 80.0);
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = u(rng);
  return v;
}

}  // namespace testing_support

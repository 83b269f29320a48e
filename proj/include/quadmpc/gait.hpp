#pragma once

#include "quadmpc/dynamics.hpp"
#include "quadmpc/types.hpp"

#include <algorithm>
#include <vector>

namespace quadmpc {

enum class GaitKind { stand, trot };

struct GaitSpec {
  GaitKind kind = GaitKind::stand;
  double period = 0.6;
  double duty_factor = 1.0;
  std::array<double, kNumLegs> phase_offsets{0.0, 0.0, 0.0, 0.0};

  static GaitSpec stand() { return {}; }

  static GaitSpec trot(double period = 0.6, double duty_factor = 0.5) {
    GaitSpec g;
    g.kind = GaitKind::trot;
    g.period = period;
    g.duty_factor = duty_factor;
    g.phase_offsets = {0.0, 0.5, 0.5, 0.0};
    return g;
  }

  double stance_duration() const { return duty_factor * period; }

  void validate() const {
    if (!(period > 0.0)) throw Error(ErrorCode::InvalidParameter, "gait period must be positive");
    if (!(duty_factor > 0.0 && duty_factor <= 1.0))
      throw Error(ErrorCode::InvalidParameter, "duty factor must lie in (0, 1]");
    for (double o : phase_offsets)
      if (!(o >= 0.0 && o < 1.0))
        throw Error(ErrorCode::InvalidParameter, "phase offsets must lie in [0, 1)");
    if (kind == GaitKind::stand && duty_factor != 1.0)
      throw Error(ErrorCode::InvalidParameter, "stand gait requires duty factor 1");
    if (kind == GaitKind::trot) {
      if (phase_offsets[FL] != phase_offsets[RR] || phase_offsets[FR] != phase_offsets[RL])
        throw Error(ErrorCode::InvalidParameter, "trot diagonal pairs must share phase");
      const double gap = std::abs(phase_offsets[FL] - phase_offsets[FR]);
      if (std::abs(gap - 0.5) > 1e-12)
        throw Error(ErrorCode::InvalidParameter, "trot pairs must differ by half a cycle");
    }
  }
};

using StanceFlags = std::array<bool, kNumLegs>;

inline double fractional_part(double x) { return x - std::floor(x); }

inline StanceFlags stance_at(const GaitSpec& gait, double t) {
  StanceFlags flags{};
  for (int leg = 0; leg < kNumLegs; ++leg)
    flags[leg] = fractional_part(t / gait.period + gait.phase_offsets[leg]) < gait.duty_factor;
  return flags;
}

/// k x 4 stance table starting at time t with spacing dt_mpc.
inline std::vector<StanceFlags> schedule_contacts(const GaitSpec& gait, double t, int k,
                                                  double dt_mpc) {
  if (k < 1) throw Error(ErrorCode::InvalidParameter, "horizon must be at least one step");
  if (!(dt_mpc > 0.0)) throw Error(ErrorCode::InvalidTimestep, "dt_mpc must be positive");
  std::vector<StanceFlags> table(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) table[i] = stance_at(gait, t + i * dt_mpc);
  return table;
}

struct FootholdParams {
  double reach_radius = 0.15;
  /// Raibert feedback gain on (v - v_cmd); zero keeps the pure v*T_stance/2 rule.
  double velocity_gain = 0.0;
};

/// Ground projection of each hip under the current yaw.
inline FootArray hip_projections(const Vec3& p_com, double yaw, const RobotParams& params) {
  const Mat3 Rz = rotation_yaw(yaw);
  FootArray hips;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    Vec3 offset = params.hip_offsets[leg];
    offset.z() = 0.0;
    hips[leg] = p_com + Rz * offset;
    hips[leg].z() = 0.0;
  }
  return hips;
}

/**
 * @brief Raibert heuristic footholds (world frame, ground at z = 0).
 *
 * foothold = hip projection + v * T_stance / 2 (+ gain * (v - v_cmd)), with the
 * horizontal shift clamped to the reach radius.
 */
inline FootArray plan_footholds(const State& state, const Vec3& v_cmd, const GaitSpec& gait,
                                const RobotParams& params, const FootholdParams& opts = {}) {
  FootArray hips = hip_projections(state.p, state.theta.z(), params);
  Vec3 shift = state.v * gait.stance_duration() / 2.0 + opts.velocity_gain * (state.v - v_cmd);
  shift.z() = 0.0;
  const double norm = shift.norm();
  if (norm > opts.reach_radius) shift *= opts.reach_radius / norm;
  for (auto& h : hips) h += shift;
  return hips;
}

inline std::vector<Vec3> relative_foot_vectors(std::span<const Vec3> footholds, const Vec3& p_com) {
  std::vector<Vec3> r;
  r.reserve(footholds.size());
  for (const auto& f : footholds) r.push_back(f - p_com);
  return r;
}

/**
 * Tracks where each foot is planted. A foot keeps its touchdown position for the
 * whole stance; swing feet are relocated to the planned foothold at touchdown.
 */
class FootholdTracker {
 public:
  FootholdTracker() = default;

  FootholdTracker(const State& state, const RobotParams& params)
      : footholds_(hip_projections(state.p, state.theta.z(), params)) {
    in_stance_.fill(true);
  }

  void update(const StanceFlags& flags, const FootArray& planned) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (flags[leg] && !in_stance_[leg]) footholds_[leg] = planned[leg];
      in_stance_[leg] = flags[leg];
    }
  }

  const FootArray& footholds() const { return footholds_; }
  const StanceFlags& stance() const { return in_stance_; }

 private:
  FootArray footholds_{};
  StanceFlags in_stance_{true, true, true, true};
};

}  // namespace quadmpc

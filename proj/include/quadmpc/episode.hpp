#pragma once

#include "quadmpc/estimator.hpp"
#include "quadmpc/gait.hpp"
#include "quadmpc/mpc.hpp"
#include "quadmpc/scenario.hpp"
#include "quadmpc/sim.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace quadmpc {

struct LogRow {
  double t = 0.0;
  Vector12 state = Vector12::Zero();
  Vector12 reference = Vector12::Zero();
  Vector12 grf = Vector12::Zero();
  Vec3 disturbance = Vec3::Zero();
  Vector6 xi = Vector6::Zero();
  /// Compensation fed to the MPC for its first horizon step.
  Vector6 forecast = Vector6::Zero();
};

/// One row per MPC step.
struct TrajectoryLog {
  std::vector<LogRow> rows;
  bool failed = false;
  std::string failure_reason;
  int qp_nonconverged = 0;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

namespace detail {

// Foot vectors for each horizon step. Feet in stance since step 0 keep their planted
// position; feet that touch down inside the horizon use the foothold planned at the
// predicted CoM position.
inline ContactPlan build_contact_plan(const State& meas, const std::vector<StanceFlags>& flags,
                                      const FootholdTracker& tracker, const ScenarioConfig& sc,
                                      double t) {
  const auto& ctl = sc.controller;
  const double dt = ctl.mpc.dt;
  const int k = ctl.mpc.horizon;
  ContactPlan plan;
  plan.stance = flags;
  plan.foot_vectors.resize(static_cast<std::size_t>(k));

  std::array<bool, kNumLegs> planted = tracker.stance();
  const double x_now = sc.profile.position_x(t);
  for (int i = 0; i < k; ++i) {
    const double ti = t + i * dt;
    Vec3 p_pred = meas.p;
    p_pred.x() += sc.profile.position_x(ti) - x_now;
    State predicted = meas;
    predicted.p = p_pred;
    predicted.v = Vec3(sc.profile.commanded_vx(ti), 0.0, 0.0);
    const GaitSpec gait = ctl.gait_for(sc.profile.segment_at(ti).gait);
    const FootArray planned = plan_footholds(predicted, predicted.v, gait, ctl.robot, ctl.footholds);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      planted[leg] = planted[leg] && flags[i][leg];
      const Vec3 foothold = planted[leg] ? tracker.footholds()[leg] : planned[leg];
      plan.foot_vectors[i][leg] = foothold - p_pred;
    }
  }
  return plan;
}

// Grid restricted to frequencies with two full periods inside the current window,
// or nothing while even f_max is not yet covered.
inline std::optional<EstimatorConfig> warmup_config(const EstimatorConfig& cfg, double span) {
  EstimatorConfig early = cfg;
  early.f_min = std::max(cfg.f_min, std::ceil((2.0 / span) / cfg.f_step - 1e-9) * cfg.f_step);
  if (early.f_min > cfg.f_max + 1e-12) return std::nullopt;
  return early;
}

struct Transition {
  double t;
  Vector12 x;
  Eigen::VectorXd u;
  DiscreteModel model;
};

}  // namespace detail

/**
 * @brief Closed loop MPC -> truth simulator -> estimator -> forecast -> MPC.
 *
 * At every MPC step the estimator ingests the last transition using the model
 * that produced its input, the compensation model is refreshed, the MPC solves
 * with the mode's forecast and the truth simulator integrates the held command.
 * Failures (blow-up, solver breakdown) end the episode with the flag set.
 */
inline TrajectoryLog run_episode(const ScenarioConfig& sc, CompensationMode mode) {
  sc.validate();
  const auto& ctl = sc.controller;
  const auto& params = ctl.robot;
  const double dt = ctl.mpc.dt;
  const int k = ctl.mpc.horizon;
  const int steps = static_cast<int>(std::llround(sc.profile.duration() / dt));
  const int substeps = static_cast<int>(std::llround(dt / sc.sim.dt_sim));
  const int refit_every = std::max(1, static_cast<int>(std::llround(ctl.refit_interval / dt)));

  State state;
  state.p = Vec3(0.0, 0.0, params.com_height);
  const ReferenceAnchor anchor{state.p, 0.0, params.com_height};

  FootholdTracker tracker(state, params);
  ResidualHistory history(ctl.estimator.window);
  PeriodicModel compensation;
  std::optional<Vector6> frozen_mean;
  bool fitted = false;
  std::optional<detail::Transition> previous;

  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  TrajectoryLog log;
  log.rows.reserve(static_cast<std::size_t>(steps));

  try {
    for (int n = 0; n < steps; ++n) {
      const double t = n * dt;
      State meas = state;
      if (sc.sim.state_noise_std > 0.0) {
        Vector12 x = meas.to_vector();
        for (int i = 0; i < kStateDim; ++i) x(i) += sc.sim.state_noise_std * noise(rng);
        meas = State::from_vector(x);
      }

      Vector6 xi_latest = Vector6::Zero();
      if (previous) {
        xi_latest = estimate_instant(meas.to_vector(), previous->x, previous->u, previous->model,
                                     ctl.estimator.weighting);
        // The estimate averages the wrench over the step, so stamp it mid-interval.
        history.push(previous->t + 0.5 * dt, xi_latest);
      }

      switch (mode) {
        case CompensationMode::off:
          break;
        case CompensationMode::static_mean:
          if (frozen_mean) {
            compensation = PeriodicModel::constant(*frozen_mean);
          } else if (!history.empty()) {
            const Vector6 mean = fit_static(history);
            compensation = PeriodicModel::constant(mean);
            if (history.full() && !ctl.static_continuous_mean) frozen_mean = mean;
          }
          break;
        case CompensationMode::periodic:
          if (history.span(dt) >= ctl.estimator.min_span() * (1.0 - 1e-9)) {
            if (!fitted || n % refit_every == 0) {
              compensation = fit_periodic(history, ctl.estimator);
              fitted = true;
            }
          } else if (!history.empty()) {
            const auto early = ctl.progressive_grid ? detail::warmup_config(ctl.estimator, history.span(dt))
                                                    : std::nullopt;
            if (!early) {
              compensation = PeriodicModel::constant(fit_static(history));
            } else if (!fitted || n % refit_every == 0) {
              compensation = fit_periodic(history, *early);
              fitted = true;
            }
          }
          break;
      }
      const auto xi_forecast = forecast(compensation, t + 0.5 * dt, k, dt, mode);

      std::vector<StanceFlags> flags(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) {
        const double ti = t + i * dt;
        flags[i] = stance_at(ctl.gait_for(sc.profile.segment_at(ti).gait), ti);
      }
      const GaitSpec gait_now = ctl.gait_for(sc.profile.segment_at(t).gait);
      const Vec3 v_cmd(sc.profile.commanded_vx(t), 0.0, 0.0);
      tracker.update(flags[0], plan_footholds(meas, v_cmd, gait_now, params, ctl.footholds));

      const ContactPlan plan = detail::build_contact_plan(meas, flags, tracker, sc, t);
      const ReferenceTrajectory ref = generate_reference(sc.profile, t, k, dt, anchor);
      MpcOutput out = mpc_step(meas, ref, plan, ctl.mpc, params, xi_forecast, ctl.qp);
      if (out.solution.status == QpStatus::infeasible)
        throw Error(ErrorCode::InfeasibleBounds, "MPC problem infeasible at t = " + std::to_string(t));
      if (out.solution.status == QpStatus::max_iterations) ++log.qp_nonconverged;

      LogRow row;
      row.t = t;
      row.state = state.to_vector();
      row.reference = reference_state(sc.profile, t, anchor);
      for (int leg = 0; leg < kNumLegs; ++leg) row.grf.segment<3>(3 * leg) = out.forces[leg];
      row.disturbance = apply_disturbance(sc.disturbance, t);
      row.xi = xi_latest;
      row.forecast = xi_forecast.front();
      log.rows.push_back(row);

      for (int s = 0; s < substeps; ++s) {
        const double ts = t + s * sc.sim.dt_sim;
        state = step_truth(state, out.forces, tracker.footholds(),
                           apply_disturbance(sc.disturbance, ts), params, sc.sim.dt_sim);
      }

      previous = detail::Transition{t, meas.to_vector(), std::move(out.u0), std::move(out.first_model)};
    }
  } catch (const Error& e) {
    log.failed = true;
    log.failure_reason = e.what();
  }
  return log;
}

}  // namespace quadmpc

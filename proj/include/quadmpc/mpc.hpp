#pragma once

#include "quadmpc/dynamics.hpp"
#include "quadmpc/gait.hpp"
#include "quadmpc/qp_solver.hpp"

#include <span>
#include <vector>

namespace quadmpc {

struct MpcWeights {
  /// Diagonal of P over (theta, p, omega, v).
  Vector12 state_weights =
      (Vector12() << 100, 100, 100, 100, 10, 200, 1, 1, 1, 10, 1, 10).finished();
  /// Scalar R_w applied to every force component.
  double effort_weight = 1e-4;
  int horizon = 10;
  double dt = 0.03;

  void validate() const {
    if (!((state_weights.array() >= 0.0).all()))
      throw Error(ErrorCode::InvalidParameter, "state weights must be nonnegative");
    if (!(effort_weight > 0.0))
      throw Error(ErrorCode::InvalidParameter, "effort weight must be strictly positive");
    if (horizon < 1) throw Error(ErrorCode::InvalidParameter, "horizon must be at least one step");
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidTimestep, "dt_mpc must be positive");
  }
};

/// Stance flags and CoM-to-foot vectors (world frame) for each horizon step.
struct ContactPlan {
  std::vector<StanceFlags> stance;
  std::vector<FootArray> foot_vectors;

  int horizon() const { return static_cast<int>(stance.size()); }

  std::array<FootContact, kNumLegs> contacts(int step) const {
    std::array<FootContact, kNumLegs> c;
    for (int leg = 0; leg < kNumLegs; ++leg) c[leg] = {stance[step][leg], foot_vectors[step][leg]};
    return c;
  }
};

/// Desired state x_ref for steps 1..k (entry i is the target for x_{i+1}).
using ReferenceTrajectory = std::vector<Vector12>;

struct VariableBlock {
  int step;
  int leg;
  int column;
};

struct QpProblem {
  DenseQp qp;
  std::vector<VariableBlock> blocks;

  int num_variables() const { return qp.num_variables(); }
};

/**
 * @brief Condensed force-level MPC problem.
 *
 * Dynamics x_{i+1} = A_i x_i + B_i u_i + G_i + Q_i xi_i are forward-substituted so
 * the decision vector holds stance-foot forces only. Each stance foot gets four
 * friction-pyramid rows and one vertical-force box row.
 */
inline QpProblem build_qp(const State& x0, const ReferenceTrajectory& ref, const ContactPlan& plan,
                          std::span<const DiscreteModel> models, const MpcWeights& weights,
                          const RobotParams& params, std::span<const Vector6> xi_forecast) {
  const int k = weights.horizon;
  if (static_cast<int>(ref.size()) != k || plan.horizon() != k ||
      static_cast<int>(models.size()) != k || static_cast<int>(xi_forecast.size()) != k)
    throw Error(ErrorCode::DimensionMismatch, "horizon lengths disagree");

  QpProblem problem;
  std::vector<int> offsets(k + 1, 0);
  for (int i = 0; i < k; ++i) {
    int stance_count = 0;
    for (int leg = 0; leg < kNumLegs; ++leg) stance_count += plan.stance[i][leg] ? 1 : 0;
    if (stance_count != models[i].contact_count())
      throw Error(ErrorCode::DimensionMismatch, "model and contact plan disagree at step " +
                                                    std::to_string(i));
    for (int c = 0; c < models[i].contact_count(); ++c)
      problem.blocks.push_back({i, models[i].stance_legs[c], offsets[i] + 3 * c});
    offsets[i + 1] = offsets[i] + models[i].input_dim();
  }
  const int n = offsets[k];

  auto& qp = problem.qp;
  if (n == 0) {
    qp.H = Eigen::MatrixXd::Zero(0, 0);
    qp.q = Eigen::VectorXd::Zero(0);
    qp.C = Eigen::MatrixXd::Zero(0, 0);
    qp.lower = qp.upper = Eigen::VectorXd::Zero(0);
    return problem;
  }

  // Row block i of Gamma/free holds x_{i+1}.
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(kStateDim * k, n);
  Eigen::VectorXd free(kStateDim * k);
  Vector12 x_prev = x0.to_vector();
  for (int i = 0; i < k; ++i) {
    const auto& m = models[i];
    auto block = gamma.middleRows(kStateDim * i, kStateDim);
    if (i > 0) block.leftCols(offsets[i]) = m.A * gamma.middleRows(kStateDim * (i - 1), kStateDim).leftCols(offsets[i]);
    if (m.input_dim() > 0) block.middleCols(offsets[i], m.input_dim()) = m.B;
    x_prev = m.A * x_prev + m.G + m.Q * xi_forecast[i];
    free.segment<kStateDim>(kStateDim * i) = x_prev;
  }

  Eigen::VectorXd error(kStateDim * k);
  Eigen::VectorXd w(kStateDim * k);
  for (int i = 0; i < k; ++i) {
    error.segment<kStateDim>(kStateDim * i) = free.segment<kStateDim>(kStateDim * i) - ref[i];
    w.segment<kStateDim>(kStateDim * i) = weights.state_weights;
  }

  const Eigen::MatrixXd weighted = w.asDiagonal() * gamma;
  qp.H = 2.0 * (gamma.transpose() * weighted);
  qp.H.diagonal().array() += 2.0 * weights.effort_weight;
  qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();
  qp.q = 2.0 * weighted.transpose() * error;

  const int rows = 5 * static_cast<int>(problem.blocks.size());
  qp.C = Eigen::MatrixXd::Zero(rows, n);
  qp.lower = Eigen::VectorXd::Constant(rows, -std::numeric_limits<double>::infinity());
  qp.upper = Eigen::VectorXd::Zero(rows);
  const double mu = params.mu;
  int row = 0;
  for (const auto& b : problem.blocks) {
    const int c = b.column;
    // f_x - mu f_z <= 0, -f_x - mu f_z <= 0, same for y.
    qp.C(row, c) = 1.0;
    qp.C(row++, c + 2) = -mu;
    qp.C(row, c) = -1.0;
    qp.C(row++, c + 2) = -mu;
    qp.C(row, c + 1) = 1.0;
    qp.C(row++, c + 2) = -mu;
    qp.C(row, c + 1) = -1.0;
    qp.C(row++, c + 2) = -mu;
    qp.C(row, c + 2) = 1.0;
    qp.lower(row) = params.fz_min;
    qp.upper(row++) = params.fz_max;
  }
  return problem;
}

/// Builds one model per horizon step from the contact plan.
inline std::vector<DiscreteModel> build_horizon_models(const State& x0, const ContactPlan& plan,
                                                       const RobotParams& params, double dt) {
  std::vector<DiscreteModel> models;
  models.reserve(plan.stance.size());
  for (int i = 0; i < plan.horizon(); ++i) {
    const auto contacts = plan.contacts(i);
    models.push_back(build_discrete_model(params, x0.theta, contacts, dt));
  }
  return models;
}

struct MpcOutput {
  FootArray forces{};
  /// Stacked stance forces applied at the first step (columns of first_model.B).
  Eigen::VectorXd u0;
  DiscreteModel first_model;
  QpSolution solution;
};

/// Solves the horizon problem and returns the first-step forces; swing feet get exact zeros.
inline MpcOutput mpc_step(const State& x, const ReferenceTrajectory& ref, const ContactPlan& plan,
                          const MpcWeights& weights, const RobotParams& params,
                          std::span<const Vector6> xi_forecast, const QpSettings& settings = {}) {
  auto models = build_horizon_models(x, plan, params, weights.dt);
  const QpProblem problem = build_qp(x, ref, plan, models, weights, params, xi_forecast);

  MpcOutput out;
  for (auto& f : out.forces) f.setZero();
  out.solution = solve_qp(problem.qp, settings);
  out.first_model = std::move(models.front());
  out.u0 = Eigen::VectorXd::Zero(out.first_model.input_dim());
  for (const auto& b : problem.blocks) {
    if (b.step != 0) break;
    out.forces[b.leg] = out.solution.u.segment<3>(b.column);
  }
  for (int c = 0; c < out.first_model.contact_count(); ++c)
    out.u0.segment<3>(3 * c) = out.forces[out.first_model.stance_legs[c]];
  return out;
}

}  // namespace quadmpc

#include "oracles/dual_projected_gradient.hpp"
#include "oracles/random_qp.hpp"

#include <gtest/gtest.h>

using namespace quadmpc;

namespace {

DenseQp unconstrained(int n) {
  DenseQp qp;
  qp.H = Eigen::MatrixXd::Identity(n, n);
  qp.q = -Eigen::VectorXd::Ones(n);
  qp.C.resize(0, n);
  qp.lower.resize(0);
  qp.upper.resize(0);
  return qp;
}

}  // namespace

TEST(SolveQp, UnconstrainedMinimizer) {
  const auto sol = solve_qp(unconstrained(5));
  ASSERT_TRUE(sol.converged());
  EXPECT_LT((sol.u - Eigen::VectorXd::Ones(5)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SolveQp, ActiveUpperBound) {
  // (u - 2)^2 = u^2 - 4u + 4  ->  H = 2, q = -4
  DenseQp qp;
  qp.H = Eigen::MatrixXd::Constant(1, 1, 2.0);
  qp.q = Eigen::VectorXd::Constant(1, -4.0);
  qp.C = Eigen::MatrixXd::Ones(1, 1);
  qp.lower = Eigen::VectorXd::Constant(1, -std::numeric_limits<double>::infinity());
  qp.upper = Eigen::VectorXd::Ones(1);
  const auto sol = solve_qp(qp);
  EXPECT_NEAR(sol.u(0), 1.0, 1e-14);
  EXPECT_NEAR(sol.multipliers(0), -2.0, 1e-12);
  EXPECT_LT(kkt_residuals(qp, sol).max(), 1e-12);
}

TEST(SolveQp, EqualityRow) {
  DenseQp qp = unconstrained(2);
  qp.C = Eigen::RowVector2d(1.0, 1.0);
  qp.lower = qp.upper = Eigen::VectorXd::Constant(1, 4.0);
  const auto sol = solve_qp(qp);
  EXPECT_NEAR(sol.u(0), 2.0, 1e-12);
  EXPECT_NEAR(sol.u(1), 2.0, 1e-12);
}

TEST(SolveQp, InfeasibleBoundsRejected) {
  DenseQp qp = unconstrained(2);
  qp.C = Eigen::RowVector2d(1.0, 0.0);
  qp.lower = Eigen::VectorXd::Constant(1, 1.0);
  qp.upper = Eigen::VectorXd::Constant(1, 0.0);
  try {
    solve_qp(qp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleBounds);
  }
}

TEST(SolveQp, ContradictoryRowsReportedInfeasible) {
  DenseQp qp = unconstrained(1);
  qp.C = Eigen::MatrixXd::Ones(2, 1);
  qp.lower = Eigen::Vector2d(2.0, -std::numeric_limits<double>::infinity());
  qp.upper = Eigen::Vector2d(std::numeric_limits<double>::infinity(), 1.0);
  EXPECT_EQ(solve_qp(qp).status, QpStatus::infeasible);
}

TEST(SolveQp, EmptyProblem) {
  DenseQp qp;
  qp.H.resize(0, 0);
  qp.q.resize(0);
  qp.C.resize(0, 0);
  qp.lower.resize(0);
  qp.upper.resize(0);
  const auto sol = solve_qp(qp);
  EXPECT_EQ(sol.u.size(), 0);
  EXPECT_TRUE(sol.converged());
}

TEST(SolveQp, MatchesDualProjectedGradientOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 24);
  for (int trial = 0; trial < 50; ++trial) {
    const DenseQp qp = oracle::random_qp(rng, size(rng), 8);
    const auto sol = solve_qp(qp);
    ASSERT_TRUE(sol.converged()) << "trial " << trial;
    const auto ref = oracle::solve_dual_projected_gradient(qp);
    const double f = qp.objective(sol.u);
    EXPECT_LE(std::abs(f - ref.objective), 1e-6 * std::max(1.0, std::abs(ref.objective))) << "trial " << trial;
    EXPECT_LT(kkt_residuals(qp, sol).max(), 1e-8) << "trial " << trial;
  }
}

TEST(SolveQp, BitIdenticalReruns) {
  std::mt19937_64 rng(99);
  const DenseQp qp = oracle::random_qp(rng, 20, 8);
  const auto a = solve_qp(qp);
  const auto b = solve_qp(qp);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.multipliers, b.multipliers);
}

#pragma once

// Random strictly convex QPs with a guaranteed feasible point.

#include "quadmpc/qp_solver.hpp"

#include <random>

namespace oracle {

inline quadmpc::DenseQp random_qp(std::mt19937_64& rng, int n, int rows) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto randn = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = normal(rng);
    return m;
  };

  quadmpc::DenseQp qp;
  const Eigen::MatrixXd F = randn(n, n);
  qp.H = F.transpose() * F / n + 0.5 * Eigen::MatrixXd::Identity(n, n);
  qp.q = 3.0 * randn(n, 1);
  qp.C = randn(rows, n);
  const Eigen::VectorXd feasible = 0.3 * randn(n, 1);
  const Eigen::VectorXd at = qp.C * feasible;
  qp.lower.resize(rows);
  qp.upper.resize(rows);
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < rows; ++i) {
    const double kind = unit(rng);
    const double up = at(i) + 0.1 + unit(rng);
    const double lo = at(i) - 0.1 - unit(rng);
    if (kind < 0.4) {
      qp.lower(i) = -inf;
      qp.upper(i) = up;
    } else if (kind < 0.7) {
      qp.lower(i) = lo;
      qp.upper(i) = inf;
    } else {
      qp.lower(i) = lo;
      qp.upper(i) = up;
    }
  }
  return qp;
}

}  // namespace oracle

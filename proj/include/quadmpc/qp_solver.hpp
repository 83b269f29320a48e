#pragma once

#include "quadmpc/types.hpp"

#include <Eigen/Cholesky>

#include <limits>
#include <vector>

namespace quadmpc {

/**
 * @brief Dense strictly convex QP
 *
 *   minimize    1/2 u' H u + q' u
 *   subject to  lower <= C u <= upper   (row-wise, +/-inf allowed)
 *
 * Rows with lower == upper are treated as equalities.
 */
struct DenseQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd q;
  Eigen::MatrixXd C;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int num_variables() const { return static_cast<int>(q.size()); }
  int num_rows() const { return static_cast<int>(C.rows()); }

  double objective(const Eigen::VectorXd& u) const { return 0.5 * u.dot(H * u) + q.dot(u); }
};

enum class QpStatus { solved, max_iterations, infeasible };

struct QpSolution {
  Eigen::VectorXd u;
  /// One multiplier per row; positive when the lower bound is active, negative for the upper.
  Eigen::VectorXd multipliers;
  QpStatus status = QpStatus::solved;
  int iterations = 0;

  bool converged() const { return status == QpStatus::solved; }
};

struct QpSettings {
  double tolerance = 1e-8;
  int max_iterations = 1000;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double max() const { return std::max({stationarity, primal, dual, complementarity}); }
};

inline KktResiduals kkt_residuals(const DenseQp& qp, const QpSolution& sol) {
  KktResiduals res;
  const int n = qp.num_variables();
  if (n == 0) return res;
  Eigen::VectorXd grad = qp.H * sol.u + qp.q;
  if (qp.num_rows() > 0) grad -= qp.C.transpose() * sol.multipliers;
  res.stationarity = grad.lpNorm<Eigen::Infinity>();
  for (int i = 0; i < qp.num_rows(); ++i) {
    const double cu = qp.C.row(i).dot(sol.u);
    const double lam = sol.multipliers(i);
    res.primal = std::max({res.primal, qp.lower(i) - cu, cu - qp.upper(i)});
    if (qp.lower(i) == qp.upper(i)) continue;
    // Sign of the multiplier must match the bound it sits on.
    if (lam > 0.0) {
      if (!std::isfinite(qp.lower(i))) res.dual = std::max(res.dual, lam);
      else res.complementarity = std::max(res.complementarity, std::abs(lam * (cu - qp.lower(i))));
    } else if (lam < 0.0) {
      if (!std::isfinite(qp.upper(i))) res.dual = std::max(res.dual, -lam);
      else res.complementarity = std::max(res.complementarity, std::abs(lam * (qp.upper(i) - cu)));
    }
  }
  return res;
}

namespace detail {

// Goldfarb-Idnani dual active-set method on the one-sided form
//   min 1/2 x'Gx + g'x  s.t.  a_i'x + b_i >= 0  (i in inequalities),  = 0 (equalities).
// J = L^-T Q and R are kept so that the active constraint normals N satisfy
// J^-1 ... N = [R; 0] (the usual factorization).
class GoldfarbIdnani {
 public:
  GoldfarbIdnani(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                 const Eigen::MatrixXd& normals, const Eigen::VectorXd& offsets,
                 int num_equalities, const QpSettings& settings)
      : G_(G), g_(g), N_(normals), b_(offsets), n_(static_cast<int>(g.size())),
        m_(static_cast<int>(offsets.size())), p_(num_equalities), settings_(settings) {}

  QpStatus solve(Eigen::VectorXd& x, Eigen::VectorXd& u_out, int& iterations) {
    Eigen::LLT<Eigen::MatrixXd> llt(G_);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::InvalidParameter, "QP Hessian is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    J_ = L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n_, n_));
    R_ = Eigen::MatrixXd::Zero(n_, n_);
    R_norm_ = 1.0;

    x = -llt.solve(g_);
    active_.assign(static_cast<std::size_t>(n_ + 1), -1);
    u_ = Eigen::VectorXd::Zero(n_ + 1);
    iq_ = 0;
    iterations = 0;

    Eigen::VectorXd d(n_), z(n_), r(n_);

    for (int i = 0; i < p_; ++i) {
      const Eigen::VectorXd np = N_.col(i);
      d = J_.transpose() * np;
      compute_z(d, z);
      compute_r(d, r);
      double t2 = 0.0;
      const double zn = z.dot(np);
      if (std::abs(z.dot(z)) > kEps) t2 = (-np.dot(x) - b_(i)) / zn;
      x += t2 * z;
      u_(iq_) = t2;
      u_.head(iq_) -= t2 * r.head(iq_);
      active_[iq_] = i;
      if (!add_constraint(d))
        throw Error(ErrorCode::RankDeficient, "equality constraints are linearly dependent");
    }

    std::vector<bool> inactive(static_cast<std::size_t>(m_), true);
    for (int i = 0; i < p_; ++i) inactive[i] = false;

    const double feas_tol = 1e-3 * settings_.tolerance;

    while (true) {
      if (iterations >= settings_.max_iterations) {
        u_out = collect_multipliers();
        return QpStatus::max_iterations;
      }
      ++iterations;

      // Most violated inactive constraint.
      int ip = -1;
      double worst = 0.0;
      for (int i = p_; i < m_; ++i) {
        if (!inactive[i]) continue;
        const double s = N_.col(i).dot(x) + b_(i);
        const double scaled = s / (1.0 + std::abs(b_(i)));
        if (scaled < -feas_tol && scaled < worst) {
          worst = scaled;
          ip = i;
        }
      }
      if (ip < 0) {
        u_out = collect_multipliers();
        return QpStatus::solved;
      }

      const Eigen::VectorXd np = N_.col(ip);
      double s_p = np.dot(x) + b_(ip);
      u_(iq_) = 0.0;
      active_[iq_] = ip;

      bool stepped_in = false;
      while (!stepped_in) {
        d = J_.transpose() * np;
        compute_z(d, z);
        compute_r(d, r);

        // Largest dual step keeping active multipliers nonnegative.
        double t1 = kInf;
        int drop = -1;
        for (int k = p_; k < iq_; ++k) {
          if (r(k) > 0.0) {
            const double ratio = u_(k) / r(k);
            if (ratio < t1) {
              t1 = ratio;
              drop = active_[k];
            }
          }
        }
        double t2 = kInf;
        if (z.norm() > kEps) t2 = -s_p / z.dot(np);
        const double t = std::min(t1, t2);

        if (t >= kInf) {
          u_out = collect_multipliers();
          return QpStatus::infeasible;
        }

        if (t2 >= kInf) {
          // Dual-only step.
          u_.head(iq_) -= t * r.head(iq_);
          u_(iq_) += t;
          inactive[drop] = true;
          delete_constraint(drop);
          continue;
        }

        x += t * z;
        u_.head(iq_) -= t * r.head(iq_);
        u_(iq_) += t;

        if (t == t2) {
          if (!add_constraint(d)) {
            // Numerically dependent; treat as satisfied to avoid cycling.
            inactive[ip] = false;
            u_(iq_) = 0.0;
            stepped_in = true;
            break;
          }
          inactive[ip] = false;
          stepped_in = true;
        } else {
          inactive[drop] = true;
          delete_constraint(drop);
          s_p = np.dot(x) + b_(ip);
        }
        if (++iterations > settings_.max_iterations) {
          u_out = collect_multipliers();
          return QpStatus::max_iterations;
        }
      }
    }
  }

 private:
  static constexpr double kEps = std::numeric_limits<double>::epsilon();
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  void compute_z(const Eigen::VectorXd& d, Eigen::VectorXd& z) const {
    z = J_.rightCols(n_ - iq_) * d.tail(n_ - iq_);
  }

  void compute_r(const Eigen::VectorXd& d, Eigen::VectorXd& r) const {
    r.setZero();
    if (iq_ == 0) return;
    r.head(iq_) = R_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d.head(iq_));
  }

  bool add_constraint(Eigen::VectorXd& d) {
    for (int j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d(j - 1);
      double ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    ++iq_;
    R_.col(iq_ - 1).head(iq_) = d.head(iq_);
    if (std::abs(d(iq_ - 1)) <= kEps * R_norm_) {
      --iq_;
      R_.col(iq_).setZero();
      return false;
    }
    R_norm_ = std::max(R_norm_, std::abs(d(iq_ - 1)));
    return true;
  }

  void delete_constraint(int constraint) {
    int qq = -1;
    for (int i = p_; i < iq_; ++i)
      if (active_[i] == constraint) {
        qq = i;
        break;
      }
    if (qq < 0) return;

    for (int i = qq; i < iq_ - 1; ++i) {
      active_[i] = active_[i + 1];
      u_(i) = u_(i + 1);
      R_.col(i) = R_.col(i + 1);
    }
    active_[iq_ - 1] = active_[iq_];
    u_(iq_ - 1) = u_(iq_);
    active_[iq_] = -1;
    u_(iq_) = 0.0;
    R_.col(iq_ - 1).setZero();
    --iq_;
    if (iq_ == 0) return;

    for (int j = qq; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < iq_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  Eigen::VectorXd collect_multipliers() const {
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(m_);
    for (int i = 0; i < iq_; ++i) lam(active_[i]) = u_(i);
    return lam;
  }

  const Eigen::MatrixXd& G_;
  const Eigen::VectorXd& g_;
  const Eigen::MatrixXd& N_;
  const Eigen::VectorXd& b_;
  int n_, m_, p_;
  QpSettings settings_;

  Eigen::MatrixXd J_, R_;
  double R_norm_ = 1.0;
  std::vector<int> active_;
  Eigen::VectorXd u_;
  int iq_ = 0;
};

}  // namespace detail

/**
 * @brief Solves a DenseQp with the Goldfarb-Idnani dual active-set method.
 *
 * Deterministic: constraint selection order depends only on the data.
 * Throws InfeasibleBounds when some row has lower > upper.
 */
inline QpSolution solve_qp(const DenseQp& qp, const QpSettings& settings = {}) {
  const int n = qp.num_variables();
  const int rows = qp.num_rows();
  if (qp.H.rows() != n || qp.H.cols() != n || qp.C.cols() != (rows > 0 ? n : qp.C.cols()) ||
      qp.lower.size() != rows || qp.upper.size() != rows)
    throw Error(ErrorCode::DimensionMismatch, "inconsistent QP dimensions");
  for (int i = 0; i < rows; ++i)
    if (qp.lower(i) > qp.upper(i))
      throw Error(ErrorCode::InfeasibleBounds, "row " + std::to_string(i) + " has lower > upper");

  QpSolution sol;
  if (n == 0) {
    sol.u = Eigen::VectorXd::Zero(0);
    sol.multipliers = Eigen::VectorXd::Zero(rows);
    return sol;
  }

  // Expand two-sided rows into one-sided constraints a'x + b >= 0, equalities first.
  struct OneSided {
    int row;
    double sign;
    double offset;
  };
  std::vector<OneSided> eq, ineq;
  for (int i = 0; i < rows; ++i) {
    const double lo = qp.lower(i), hi = qp.upper(i);
    if (lo == hi) {
      eq.push_back({i, 1.0, -lo});
      continue;
    }
    if (std::isfinite(lo)) ineq.push_back({i, 1.0, -lo});
    if (std::isfinite(hi)) ineq.push_back({i, -1.0, hi});
  }
  std::vector<OneSided> all = eq;
  all.insert(all.end(), ineq.begin(), ineq.end());

  const int m = static_cast<int>(all.size());
  Eigen::MatrixXd normals(n, m);
  Eigen::VectorXd offsets(m);
  for (int j = 0; j < m; ++j) {
    normals.col(j) = all[j].sign * qp.C.row(all[j].row).transpose();
    offsets(j) = all[j].offset;
  }

  detail::GoldfarbIdnani solver(qp.H, qp.q, normals, offsets, static_cast<int>(eq.size()),
                                settings);
  Eigen::VectorXd x, lam;
  sol.status = solver.solve(x, lam, sol.iterations);
  sol.u = x;
  sol.multipliers = Eigen::VectorXd::Zero(rows);
  for (int j = 0; j < m; ++j) sol.multipliers(all[j].row) += all[j].sign * lam(j);
  return sol;
}

}  // namespace quadmpc

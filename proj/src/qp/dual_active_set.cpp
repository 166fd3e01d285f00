// Goldfarb-Idnani dual active-set method for strictly convex QPs.
//
// Constraints are handled internally in the form n_i' x >= c_i. The
// factorization keeps J = L^-T Q and an upper-triangular R such that the
// first iq columns of J span the active normals, following Goldfarb and
// Idnani (1983) and the Powell-style Givens updates used by quadprog.

#include "ata/qp.hpp"

#include "qp_internal.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace ata {
namespace {

enum class RowKind { Ineq, Lower, Upper };

struct RowRef {
  RowKind kind;
  Eigen::Index index;
};

// Squared ratio ||d2|| / ||d|| below which a new normal counts as dependent
// on the active ones.
constexpr double kDependenceRatio2 = 1e-20;

class DualActiveSet {
public:
  DualActiveSet(const Eigen::MatrixXd& h, const QpProblem& problem) : problem_(problem) {
    n_ = h.rows();
    build_constraints();

    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) {
      Eigen::MatrixXd shifted = h;
      shifted.diagonal().array() += kHessianRegularization;
      llt.compute(shifted);
      hessian_ = shifted;
    } else {
      hessian_ = h;
    }
    factor_ok_ = llt.info() == Eigen::Success;
    if (!factor_ok_) return;

    const Eigen::MatrixXd l = llt.matrixL();
    j_base_ = l.transpose().triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(n_, n_));
    x_ = -llt.solve(problem.linear_cost);
  }

  QpSolution run(const QpSettings& settings) {
    QpSolution out;
    if (!factor_ok_) {
      out.status = QpStatus::Infeasible;
      out.z_star = Eigen::VectorXd::Zero(n_);
      finish(out, settings);
      out.status = QpStatus::Infeasible;
      return out;
    }

    const Eigen::Index m = normals_.cols();
    j_ = j_base_;
    r_ = Eigen::MatrixXd::Zero(n_, n_);
    u_ = Eigen::VectorXd::Zero(n_ + 1);
    active_.assign(static_cast<std::size_t>(n_ + 1), -1);
    inactive_.assign(static_cast<std::size_t>(m), true);
    iq_ = 0;
    r_norm_ = 1.0;

    Eigen::VectorXd s(m);
    std::vector<bool> allowed(static_cast<std::size_t>(m), true);
    std::size_t iterations = 0;
    QpStatus status = QpStatus::Optimal;

    for (;;) {
      // Step 1: slacks at the current dual-feasible point.
      for (Eigen::Index i = 0; i < m; ++i) s[i] = normals_.col(i).dot(x_) - rhs_[i];
      const Eigen::VectorXd x_old = x_;
      const Eigen::VectorXd u_old = u_;
      const std::vector<int> active_old(active_.begin(), active_.begin() + iq_);
      std::fill(allowed.begin(), allowed.end(), true);

    choose:
      // Step 2: most violated admissible constraint.
      Eigen::Index ip = -1;
      double worst = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!inactive_[static_cast<std::size_t>(i)] || !allowed[static_cast<std::size_t>(i)])
          continue;
        const double scaled = s[i] / violation_scale(i);
        if (scaled < worst && s[i] < -feasibility_floor(i)) {
          worst = scaled;
          ip = i;
        }
      }
      if (ip < 0) break;

      const Eigen::VectorXd np = normals_.col(ip);
      u_[iq_] = 0.0;
      active_[static_cast<std::size_t>(iq_)] = static_cast<int>(ip);

      for (;;) {
        if (++iterations > settings.max_iterations) {
          status = QpStatus::MaxIterations;
          goto done;
        }
        // Step 2a: primal and dual step directions.
        const Eigen::VectorXd d = j_.transpose() * np;
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n_);
        if (iq_ < n_) z = j_.rightCols(n_ - iq_) * d.tail(n_ - iq_);
        Eigen::VectorXd r(iq_);
        if (iq_ > 0)
          r = r_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d.head(iq_));

        // Step 2b: partial (dual) step length.
        double t1 = kInf;
        int drop = -1;
        for (Eigen::Index k = 0; k < iq_; ++k) {
          if (r[k] > 0.0) {
            const double ratio = u_[k] / r[k];
            if (ratio < t1) {
              t1 = ratio;
              drop = active_[static_cast<std::size_t>(k)];
            }
          }
        }
        // Full (primal) step length.
        const double d_norm2 = d.squaredNorm();
        const double d2_norm2 = iq_ < n_ ? d.tail(n_ - iq_).squaredNorm() : 0.0;
        double t2 = kInf;
        if (d2_norm2 > kDependenceRatio2 * d_norm2) t2 = -s[ip] / z.dot(np);

        const double t = std::min(t1, t2);
        if (!std::isfinite(t)) {
          status = QpStatus::Infeasible;
          goto done;
        }

        if (!std::isfinite(t2)) {
          // Dual step only; the blocking constraint leaves the active set.
          if (iq_ > 0) u_.head(iq_) -= t * r;
          u_[iq_] += t;
          inactive_[static_cast<std::size_t>(drop)] = true;
          delete_constraint(drop);
          continue;
        }

        x_ += t * z;
        if (iq_ > 0) u_.head(iq_) -= t * r;
        u_[iq_] += t;

        if (t == t2) {
          if (!add_constraint(d)) {
            // Numerically dependent: exclude ip for this round and restore.
            allowed[static_cast<std::size_t>(ip)] = false;
            rebuild(active_old, u_old);
            x_ = x_old;
            for (Eigen::Index i = 0; i < m; ++i) s[i] = normals_.col(i).dot(x_) - rhs_[i];
            goto choose;
          }
          inactive_[static_cast<std::size_t>(ip)] = false;
          break;
        }

        inactive_[static_cast<std::size_t>(drop)] = true;
        delete_constraint(drop);
        s[ip] = np.dot(x_) - rhs_[ip];
      }
    }

  done:
    out.z_star = x_;
    out.iterations = iterations;
    out.status = status;
    finish(out, settings);
    return out;
  }

private:
  void build_constraints() {
    const Eigen::Index nin = problem_.ineq_matrix.rows();
    std::vector<RowRef> rows;
    for (Eigen::Index i = 0; i < nin; ++i) rows.push_back({RowKind::Ineq, i});
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (std::isfinite(problem_.lower[j])) rows.push_back({RowKind::Lower, j});
      if (std::isfinite(problem_.upper[j])) rows.push_back({RowKind::Upper, j});
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    normals_ = Eigen::MatrixXd::Zero(n_, m);
    rhs_ = Eigen::VectorXd(m);
    scale_ = Eigen::VectorXd(m);
    for (Eigen::Index c = 0; c < m; ++c) {
      const RowRef& ref = rows[static_cast<std::size_t>(c)];
      switch (ref.kind) {
        case RowKind::Ineq:
          normals_.col(c) = -problem_.ineq_matrix.row(ref.index).transpose();
          rhs_[c] = -problem_.ineq_rhs[ref.index];
          break;
        case RowKind::Lower:
          normals_(ref.index, c) = 1.0;
          rhs_[c] = problem_.lower[ref.index];
          break;
        case RowKind::Upper:
          normals_(ref.index, c) = -1.0;
          rhs_[c] = -problem_.upper[ref.index];
          break;
      }
      const double nn = normals_.col(c).norm();
      scale_[c] = nn > 0.0 ? nn : 1.0;
    }
    refs_ = std::move(rows);
  }

  double violation_scale(Eigen::Index i) const { return scale_[i]; }

  double feasibility_floor(Eigen::Index i) const {
    const double mag = std::max({1.0, std::abs(rhs_[i]),
                                 normals_.col(i).cwiseAbs().maxCoeff() * x_.cwiseAbs().maxCoeff()});
    return 1e-13 * mag;
  }

  bool add_constraint(Eigen::VectorXd d) {
    // Rotate d(iq..n-1) onto d(iq) with Givens rotations applied to J.
    for (Eigen::Index j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d[j - 1];
      double ss = d[j];
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d[j] = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d[j - 1] = -h;
      } else {
        d[j - 1] = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double a = j_(k, j - 1);
        const double b = j_(k, j);
        j_(k, j - 1) = a * cc + b * ss;
        j_(k, j) = xny * (a + j_(k, j - 1)) - b;
      }
    }
    ++iq_;
    r_.col(iq_ - 1).head(iq_) = d.head(iq_);
    if (std::abs(d[iq_ - 1]) <= std::numeric_limits<double>::epsilon() * r_norm_) return false;
    r_norm_ = std::max(r_norm_, std::abs(d[iq_ - 1]));
    return true;
  }

  void delete_constraint(int constraint) {
    Eigen::Index qq = -1;
    for (Eigen::Index k = 0; k < iq_; ++k) {
      if (active_[static_cast<std::size_t>(k)] == constraint) {
        qq = k;
        break;
      }
    }
    if (qq < 0) return;

    for (Eigen::Index i = qq; i < iq_ - 1; ++i) {
      active_[static_cast<std::size_t>(i)] = active_[static_cast<std::size_t>(i + 1)];
      u_[i] = u_[i + 1];
      r_.col(i) = r_.col(i + 1);
    }
    active_[static_cast<std::size_t>(iq_ - 1)] = active_[static_cast<std::size_t>(iq_)];
    u_[iq_ - 1] = u_[iq_];
    active_[static_cast<std::size_t>(iq_)] = -1;
    u_[iq_] = 0.0;
    r_.col(iq_ - 1).setZero();
    --iq_;
    if (iq_ == 0) return;

    for (Eigen::Index j = qq; j < iq_; ++j) {
      double cc = r_(j, j);
      double ss = r_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      r_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        r_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        r_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = j + 1; k < iq_; ++k) {
        const double a = r_(j, k);
        const double b = r_(j + 1, k);
        r_(j, k) = a * cc + b * ss;
        r_(j + 1, k) = xny * (a + r_(j, k)) - b;
      }
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double a = j_(k, j);
        const double b = j_(k, j + 1);
        j_(k, j) = a * cc + b * ss;
        j_(k, j + 1) = xny * (j_(k, j) + a) - b;
      }
    }
  }

  // Re-factor from scratch for a given active list.
  void rebuild(const std::vector<int>& active, const Eigen::VectorXd& u) {
    j_ = j_base_;
    r_.setZero();
    iq_ = 0;
    r_norm_ = 1.0;
    std::fill(inactive_.begin(), inactive_.end(), true);
    std::fill(active_.begin(), active_.end(), -1);
    u_.setZero();
    for (std::size_t k = 0; k < active.size(); ++k) {
      const int c = active[k];
      const Eigen::VectorXd d = j_.transpose() * normals_.col(c);
      active_[static_cast<std::size_t>(iq_)] = c;
      if (!add_constraint(d)) {
        active_[static_cast<std::size_t>(iq_)] = -1;
        continue;
      }
      u_[iq_ - 1] = u[static_cast<Eigen::Index>(k)];
      inactive_[static_cast<std::size_t>(c)] = false;
    }
  }

  void finish(QpSolution& out, const QpSettings& settings) const {
    const Eigen::Index nin = problem_.ineq_matrix.rows();
    out.ineq_dual = Eigen::VectorXd::Zero(nin);
    out.box_dual = Eigen::VectorXd::Zero(n_);
    if (out.status != QpStatus::Infeasible) {
      for (Eigen::Index k = 0; k < iq_; ++k) {
        const RowRef& ref = refs_[static_cast<std::size_t>(active_[static_cast<std::size_t>(k)])];
        const double mult = u_[k];
        switch (ref.kind) {
          case RowKind::Ineq: out.ineq_dual[ref.index] = mult; break;
          case RowKind::Lower: out.box_dual[ref.index] -= mult; break;
          case RowKind::Upper: out.box_dual[ref.index] += mult; break;
        }
      }
    }
    out.objective = 0.5 * out.z_star.dot(hessian_ * out.z_star) +
                    problem_.linear_cost.dot(out.z_star);
    out.primal_residual = detail::primal_violation(problem_, out.z_star);
    out.dual_residual =
        detail::lagrangian_gradient(hessian_, problem_, out.z_star, out.ineq_dual, out.box_dual)
            .cwiseAbs()
            .maxCoeff();
    if (out.status == QpStatus::Optimal &&
        (out.primal_residual > settings.tol_primal || out.dual_residual > settings.tol_dual)) {
      out.status = QpStatus::MaxIterations;
    }
  }

  const QpProblem& problem_;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd hessian_;
  Eigen::MatrixXd normals_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd scale_;
  std::vector<RowRef> refs_;
  bool factor_ok_ = false;

  Eigen::MatrixXd j_base_;
  Eigen::MatrixXd j_;
  Eigen::MatrixXd r_;
  Eigen::VectorXd u_;
  Eigen::VectorXd x_;
  std::vector<int> active_;
  std::vector<bool> inactive_;
  Eigen::Index iq_ = 0;
  double r_norm_ = 1.0;
};

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings) {
  problem.check_dimensions();
  const Eigen::MatrixXd h = detail::regularized_hessian(problem);
  DualActiveSet solver(h, problem);
  return solver.run(settings);
}

}  // namespace ata

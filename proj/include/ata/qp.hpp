#ifndef ATA_QP_HPP
#define ATA_QP_HPP

/**
 * @file
 * @brief Dense convex quadratic programs and their KKT certification.
 *
 * Problems have the form
 *
 *   minimize    1/2 z' H z + q' z
 *   subject to  A z <= b,  lower <= z <= upper
 *
 * H is read from its lower triangle only. Bounds may be infinite.
 */

#include <Eigen/Core>

#include <cstddef>
#include <limits>
#include <string_view>

namespace ata {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Added to exactly-zero Hessian diagonal entries so the program is strictly convex.
inline constexpr double kHessianRegularization = 1e-8;

struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear_cost;
  Eigen::MatrixXd ineq_matrix;
  Eigen::VectorXd ineq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// Unconstrained problem with unbounded box.
  static QpProblem unconstrained(Eigen::MatrixXd hessian, Eigen::VectorXd linear_cost);

  std::size_t num_variables() const { return static_cast<std::size_t>(hessian.rows()); }
  std::size_t num_ineq() const { return static_cast<std::size_t>(ineq_matrix.rows()); }

  /// Inequality rows plus every finite side of the box.
  std::size_t num_constraint_rows() const;

  /// Throws DimensionError on inconsistent shapes or crossed bounds.
  void check_dimensions() const;

  /// 1/2 z'Hz + q'z with H taken from its lower triangle.
  double objective(const Eigen::VectorXd& z) const;
};

enum class QpStatus { Optimal, MaxIterations, Infeasible };

std::string_view to_string(QpStatus status);

struct QpSettings {
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  double tol_obj = 1e-5;
  std::size_t max_iterations = 20000;
};

struct QpSolution {
  Eigen::VectorXd z_star;
  double objective = 0.0;
  QpStatus status = QpStatus::Infeasible;
  std::size_t iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;

  // Multipliers: ineq_dual >= 0 for A z <= b; box_dual is signed,
  // negative on an active lower bound and positive on an active upper bound.
  Eigen::VectorXd ineq_dual;
  Eigen::VectorXd box_dual;

  bool optimal() const { return status == QpStatus::Optimal; }
};

/**
 * Solves a strictly convex QP with a Goldfarb-Idnani dual active-set
 * iteration. Zero diagonal entries of H receive kHessianRegularization
 * first; if H is still not positive definite the same shift is applied to
 * the whole diagonal.
 *
 * Infeasible is returned when the iteration finds no admissible step for a
 * violated constraint, which certifies that the feasible set is empty.
 */
QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {});

struct KktReport {
  double stationarity = 0.0;
  double primal_feasibility = 0.0;
  double complementarity = 0.0;
  bool pass = false;

  // Multiplier estimates used for the stationarity and complementarity terms.
  Eigen::VectorXd ineq_dual;
  Eigen::VectorXd box_dual;
};

/**
 * Residuals of the KKT conditions at a candidate point. Multipliers are
 * estimated by nonnegative least squares over the constraints whose slack is
 * at most sqrt(tol); stationarity is the infinity norm of the remaining
 * gradient of the Lagrangian.
 */
KktReport check_kkt(const QpProblem& problem, const Eigen::VectorXd& candidate, double tol);

/// Same, using caller-supplied multipliers (e.g. from QpSolution).
KktReport check_kkt(const QpProblem& problem, const Eigen::VectorXd& candidate,
                    const Eigen::VectorXd& ineq_dual, const Eigen::VectorXd& box_dual,
                    double tol);

}  // namespace ata

#endif  // ATA_QP_HPP

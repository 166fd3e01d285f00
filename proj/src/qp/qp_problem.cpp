#include "ata/qp.hpp"

#include "ata/errors.hpp"
#include "qp_internal.hpp"

#include <cmath>
#include <string>

namespace ata {

QpProblem QpProblem::unconstrained(Eigen::MatrixXd hessian, Eigen::VectorXd linear_cost) {
  const Eigen::Index n = hessian.rows();
  QpProblem p;
  p.hessian = std::move(hessian);
  p.linear_cost = std::move(linear_cost);
  p.ineq_matrix = Eigen::MatrixXd(0, n);
  p.ineq_rhs = Eigen::VectorXd(0);
  p.lower = Eigen::VectorXd::Constant(n, -kInf);
  p.upper = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

std::size_t QpProblem::num_constraint_rows() const {
  std::size_t rows = num_ineq();
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (std::isfinite(lower[j])) ++rows;
    if (std::isfinite(upper[j])) ++rows;
  }
  return rows;
}

void QpProblem::check_dimensions() const {
  const Eigen::Index n = hessian.rows();
  auto fail = [](const std::string& msg) { throw DimensionError("QpProblem: " + msg); };
  if (n < 1) fail("at least one variable is required");
  if (hessian.cols() != n) fail("hessian must be square");
  if (linear_cost.size() != n) fail("linear_cost length differs from hessian order");
  if (ineq_matrix.cols() != n && ineq_matrix.rows() > 0)
    fail("ineq_matrix column count differs from hessian order");
  if (ineq_rhs.size() != ineq_matrix.rows()) fail("ineq_rhs length differs from ineq_matrix rows");
  if (lower.size() != n || upper.size() != n) fail("box bounds must have one entry per variable");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j])) fail("NaN box bound");
    if (lower[j] > upper[j]) fail("lower bound above upper bound at index " + std::to_string(j));
  }
  if (!hessian.allFinite() || !linear_cost.allFinite() || !ineq_matrix.allFinite() ||
      !ineq_rhs.allFinite())
    fail("non-finite problem data");
}

double QpProblem::objective(const Eigen::VectorXd& z) const {
  const Eigen::MatrixXd h = hessian.selfadjointView<Eigen::Lower>();
  return 0.5 * z.dot(h * z) + linear_cost.dot(z);
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::MaxIterations: return "MaxIterations";
    case QpStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

namespace detail {

Eigen::MatrixXd regularized_hessian(const QpProblem& problem) {
  Eigen::MatrixXd h = problem.hessian.selfadjointView<Eigen::Lower>();
  for (Eigen::Index j = 0; j < h.rows(); ++j) {
    if (h(j, j) == 0.0) h(j, j) = kHessianRegularization;
  }
  return h;
}

double primal_violation(const QpProblem& problem, const Eigen::VectorXd& z) {
  double v = 0.0;
  if (problem.num_ineq() > 0) {
    const Eigen::VectorXd slack = problem.ineq_matrix * z - problem.ineq_rhs;
    v = std::max(v, slack.maxCoeff());
  }
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    v = std::max(v, problem.lower[j] - z[j]);
    v = std::max(v, z[j] - problem.upper[j]);
  }
  return v;
}

Eigen::VectorXd lagrangian_gradient(const Eigen::MatrixXd& h, const QpProblem& problem,
                                    const Eigen::VectorXd& z, const Eigen::VectorXd& ineq_dual,
                                    const Eigen::VectorXd& box_dual) {
  Eigen::VectorXd g = h * z + problem.linear_cost + box_dual;
  if (problem.num_ineq() > 0) g += problem.ineq_matrix.transpose() * ineq_dual;
  return g;
}

}  // namespace detail
}  // namespace ata

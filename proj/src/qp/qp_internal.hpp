#ifndef ATA_SRC_QP_INTERNAL_HPP
#define ATA_SRC_QP_INTERNAL_HPP

#include "ata/qp.hpp"

namespace ata::detail {

/// Full symmetric Hessian (from the lower triangle) with zero diagonals regularized.
Eigen::MatrixXd regularized_hessian(const QpProblem& problem);

/// Largest violation of A z <= b and the box; 0 when feasible.
double primal_violation(const QpProblem& problem, const Eigen::VectorXd& z);

/// H z + q + A' ineq_dual + box_dual.
Eigen::VectorXd lagrangian_gradient(const Eigen::MatrixXd& h, const QpProblem& problem,
                                    const Eigen::VectorXd& z, const Eigen::VectorXd& ineq_dual,
                                    const Eigen::VectorXd& box_dual);

}  // namespace ata::detail

#endif  // ATA_SRC_QP_INTERNAL_HPP

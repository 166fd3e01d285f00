#ifndef ATA_TRACE_HPP
#define ATA_TRACE_HPP

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ata {

/// Observable state of one closed-loop step. Matrices have one row per robot.
struct TraceRecord {
  std::uint64_t step = 0;
  double time = 0.0;
  Eigen::MatrixXd x_act;  ///< N x 2, measured at this step
  Eigen::MatrixXd x_sim;  ///< N x 2, nominal prediction from the previous step
  Eigen::MatrixXd u;      ///< N x 2, command computed at this step
  std::vector<std::size_t> task_of;
  Eigen::MatrixXd slacks;       ///< N x M
  Eigen::MatrixXd spec;         ///< N x M, values used by this step's allocation
  Eigen::MatrixXd costs;        ///< N x M, V_ij(x_act)
  Eigen::MatrixXd delta_v;      ///< N x M, V(x_sim) - V(x_act); zero at step 0
  Eigen::VectorXd pi_h;         ///< M
  double objective_total = 0.0;
  double objective_mismatch = 0.0;
  bool reassigned = false;  ///< task_of differs from the previous step
  std::int64_t qp_iterations = 0;

  std::size_t num_robots() const { return task_of.size(); }

  friend bool operator==(const TraceRecord& a, const TraceRecord& b);
};

using Trace = std::vector<TraceRecord>;

}  // namespace ata

#endif  // ATA_TRACE_HPP

#ifndef ATA_ALLOCATOR_HPP
#define ATA_ALLOCATOR_HPP

/**
 * @file
 * @brief Simultaneous task allocation and execution.
 *
 * Each step solves
 *
 *   min  C ||pi* - pi_h(alpha)||_T^2 + sum_i ( ||u_i||^2 + l ||delta_i||_{S_i}^2 )
 *
 * over one-hot assignments alpha, inputs u and slacks delta, subject to one
 * barrier row per (robot, task), big-M prioritization rows and box bounds.
 * For a fixed alpha the program separates per robot, so every (robot, task)
 * hypothesis is solved once and the assignment is found by exhaustive search
 * over the memoized costs.
 */

#include "ata/qp.hpp"
#include "ata/task_models.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace ata {

/// N x M matrix of specialization values s_ij in [0, s_max].
struct SpecializationState {
  Eigen::MatrixXd values;
  double s_max = 1.0;
  double eps_s = 1e-3;  ///< s <= eps_s counts as zero in the projector

  std::size_t num_robots() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t num_tasks() const { return static_cast<std::size_t>(values.cols()); }
};

struct GlobalSpec {
  Eigen::VectorXd pi_star;
  Eigen::VectorXd task_weights;  ///< diagonal of T
  double mismatch_weight = 1e13;  ///< C
  double slack_weight = 1e-5;     ///< l
  double kappa = 1e6;
  double delta_max = 1.5e7;
  double u_max = 0.2;  ///< per-axis input bound, m/s

  /// Uniform pi* and identity T for M tasks, defaults elsewhere.
  static GlobalSpec defaults(std::size_t num_tasks);
};

struct Assignment {
  std::vector<std::size_t> task_of;  ///< task_of[i] = m  <=>  alpha_im = 1

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct AllocationSolution {
  Assignment assignment;
  Eigen::MatrixXd inputs;  ///< N x 2
  Eigen::MatrixXd slacks;  ///< N x M
  double objective_total = 0.0;
  double objective_mismatch = 0.0;
  Eigen::VectorXd per_robot_costs;
  Eigen::MatrixXd robot_task_costs;     ///< Q_i(m), N x M
  Eigen::MatrixXi qp_iterations;        ///< N x M
};

struct AllocatorSettings {
  QpSettings qp;
  /// Exhaustive search is allowed while N * log2(M) <= this many bits.
  double max_search_bits = 24.0;
  /// Relative tolerance under which two objectives count as tied.
  double tie_tolerance = 1e-9;
};

/// Diagonal of P_i = S_i S_i^+ with eps_s as the zero threshold.
Eigen::VectorXd effective_projector(const SpecializationState& spec, std::size_t robot);

/// (1/N) sum_i P_i alpha_i
Eigen::VectorXd pi_h(const SpecializationState& spec, const Assignment& assignment);

/// C ||pi* - pi_h||_T^2
double mismatch_cost(const GlobalSpec& gs, const Eigen::VectorXd& pi_h_value);

/// ||u||^2 + l ||delta||_S^2 for one robot.
double robot_cost(const Vec2& u, const Eigen::VectorXd& slacks, const Eigen::VectorXd& s_row,
                  double slack_weight);

/// Right-hand side of prioritization row (m', n) when task `prioritized` is selected.
double priority_rhs(std::size_t row_task, std::size_t prioritized, const GlobalSpec& gs);

/**
 * Per-robot QP for hypothesis "robot prioritizes `task`". Decision vector
 * z = (u_x, u_y, delta_1..delta_M). Rows: M barrier rows, then the M(M-1)
 * prioritization rows delta_m' - delta_n / kappa <= Omega_m'n in
 * (m', n) lexicographic order; |u| <= u_max and |delta| <= delta_max are
 * box bounds.
 */
QpProblem build_robot_qp(std::size_t robot, std::size_t task, std::span<const Vec2> states,
                         std::span<const TaskDef> tasks, const SpecializationState& spec,
                         const GlobalSpec& gs, const GammaConfig& gamma);

struct AssignmentChoice {
  Assignment assignment;
  double objective = 0.0;
  double mismatch = 0.0;
};

/**
 * Exact argmin over all M^N assignments of mismatch + sum_i Q(i, task_of[i]).
 * Enumerates in lexicographic order so ties go to the smallest task_of.
 */
AssignmentChoice search_assignment(const Eigen::MatrixXd& robot_task_costs,
                                   const SpecializationState& spec, const GlobalSpec& gs,
                                   const AllocatorSettings& settings = {});

/// Throws SearchSpaceTooLarge, QpInfeasibleError, DimensionError.
AllocationSolution solve_allocation(std::span<const Vec2> states, std::span<const TaskDef> tasks,
                                    const SpecializationState& spec, const GlobalSpec& gs,
                                    const GammaConfig& gamma,
                                    const AllocatorSettings& settings = {});

}  // namespace ata

#endif  // ATA_ALLOCATOR_HPP

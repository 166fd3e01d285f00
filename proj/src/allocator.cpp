#include "ata/allocator.hpp"

#include "ata/errors.hpp"

#include <cmath>
#include <string>

namespace ata {

GlobalSpec GlobalSpec::defaults(std::size_t num_tasks) {
  GlobalSpec gs;
  const auto m = static_cast<Eigen::Index>(num_tasks);
  gs.pi_star = m > 0 ? Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m))
                     : Eigen::VectorXd();
  gs.task_weights = Eigen::VectorXd::Ones(m);
  return gs;
}

Eigen::VectorXd effective_projector(const SpecializationState& spec, std::size_t robot) {
  const auto i = static_cast<Eigen::Index>(robot);
  Eigen::VectorXd p(spec.values.cols());
  for (Eigen::Index m = 0; m < p.size(); ++m) p[m] = spec.values(i, m) > spec.eps_s ? 1.0 : 0.0;
  return p;
}

namespace {

void check_assignment(const SpecializationState& spec, const Assignment& a) {
  if (a.task_of.size() != spec.num_robots())
    throw DimensionError("assignment covers " + std::to_string(a.task_of.size()) +
                         " robots, specialization has " + std::to_string(spec.num_robots()));
  for (std::size_t t : a.task_of)
    if (t >= spec.num_tasks()) throw DimensionError("assignment names task out of range");
}

// Integer counts divided once by N, so permuting robots cannot change the bits.
Eigen::VectorXd pi_h_from_counts(const std::vector<int>& counts, std::size_t n) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t m = 0; m < counts.size(); ++m)
    out[static_cast<Eigen::Index>(m)] = static_cast<double>(counts[m]) / static_cast<double>(n);
  return out;
}

}  // namespace

Eigen::VectorXd pi_h(const SpecializationState& spec, const Assignment& a) {
  check_assignment(spec, a);
  const std::size_t n = spec.num_robots();
  std::vector<int> counts(spec.num_tasks(), 0);
  if (n == 0) return pi_h_from_counts(counts, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = a.task_of[i];
    if (spec.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) > spec.eps_s)
      ++counts[m];
  }
  return pi_h_from_counts(counts, n);
}

double mismatch_cost(const GlobalSpec& gs, const Eigen::VectorXd& pi_h_value) {
  if (pi_h_value.size() != gs.pi_star.size() || gs.task_weights.size() != gs.pi_star.size())
    throw DimensionError("mismatch_cost: pi_star, task_weights and pi_h lengths differ");
  double acc = 0.0;
  for (Eigen::Index m = 0; m < pi_h_value.size(); ++m) {
    const double e = gs.pi_star[m] - pi_h_value[m];
    acc += gs.task_weights[m] * e * e;
  }
  return gs.mismatch_weight * acc;
}

double robot_cost(const Vec2& u, const Eigen::VectorXd& slacks, const Eigen::VectorXd& s_row,
                  double slack_weight) {
  double weighted = 0.0;
  for (Eigen::Index m = 0; m < slacks.size(); ++m) weighted += s_row[m] * slacks[m] * slacks[m];
  return u.squaredNorm() + slack_weight * weighted;
}

double priority_rhs(std::size_t row_task, std::size_t prioritized, const GlobalSpec& gs) {
  return row_task == prioritized ? 0.0 : (1.0 + 1.0 / gs.kappa) * gs.delta_max;
}

QpProblem build_robot_qp(std::size_t robot, std::size_t task, std::span<const Vec2> states,
                         std::span<const TaskDef> tasks, const SpecializationState& spec,
                         const GlobalSpec& gs, const GammaConfig& gamma) {
  const std::size_t m_count = tasks.size();
  if (robot >= states.size() || robot >= spec.num_robots())
    throw DimensionError("build_robot_qp: robot index out of range");
  if (task >= m_count || spec.num_tasks() != m_count)
    throw DimensionError("build_robot_qp: task index out of range");

  const auto mm = static_cast<Eigen::Index>(m_count);
  const Eigen::Index nz = 2 + mm;
  const auto i = static_cast<Eigen::Index>(robot);

  QpProblem qp;
  qp.hessian = Eigen::MatrixXd::Zero(nz, nz);
  qp.hessian(0, 0) = 2.0;
  qp.hessian(1, 1) = 2.0;
  for (Eigen::Index m = 0; m < mm; ++m)
    qp.hessian(2 + m, 2 + m) = 2.0 * gs.slack_weight * spec.values(i, m);
  qp.linear_cost = Eigen::VectorXd::Zero(nz);

  const Eigen::Index rows = mm + mm * (mm - 1);
  qp.ineq_matrix = Eigen::MatrixXd::Zero(rows, nz);
  qp.ineq_rhs = Eigen::VectorXd::Zero(rows);

  // coeff.u >= rhs - delta   <=>   -coeff.u - delta <= -rhs
  for (Eigen::Index m = 0; m < mm; ++m) {
    const ConstraintRow row =
        barrier_row(tasks[static_cast<std::size_t>(m)], states[robot], gamma);
    qp.ineq_matrix(m, 0) = -row.coeff_u.x();
    qp.ineq_matrix(m, 1) = -row.coeff_u.y();
    qp.ineq_matrix(m, 2 + m) = -1.0;
    qp.ineq_rhs[m] = -row.rhs_base;
  }

  Eigen::Index r = mm;
  for (Eigen::Index a = 0; a < mm; ++a) {
    for (Eigen::Index b = 0; b < mm; ++b) {
      if (a == b) continue;
      qp.ineq_matrix(r, 2 + a) = 1.0;
      qp.ineq_matrix(r, 2 + b) = -1.0 / gs.kappa;
      qp.ineq_rhs[r] = priority_rhs(static_cast<std::size_t>(a), task, gs);
      ++r;
    }
  }

  qp.lower.resize(nz);
  qp.upper.resize(nz);
  qp.lower.head(2).setConstant(-gs.u_max);
  qp.upper.head(2).setConstant(gs.u_max);
  qp.lower.tail(mm).setConstant(-gs.delta_max);
  qp.upper.tail(mm).setConstant(gs.delta_max);
  return qp;
}

AssignmentChoice search_assignment(const Eigen::MatrixXd& q, const SpecializationState& spec,
                                   const GlobalSpec& gs, const AllocatorSettings& settings) {
  const std::size_t n = spec.num_robots();
  const std::size_t m_count = spec.num_tasks();
  if (static_cast<std::size_t>(q.rows()) != n || static_cast<std::size_t>(q.cols()) != m_count)
    throw DimensionError("search_assignment: cost table shape differs from specialization");
  if (static_cast<std::size_t>(gs.pi_star.size()) != m_count)
    throw DimensionError("search_assignment: pi_star length differs from task count");

  AssignmentChoice best;
  if (n == 0) {
    best.mismatch = mismatch_cost(gs, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_count)));
    best.objective = best.mismatch;
    return best;
  }
  if (m_count == 0) throw DimensionError("search_assignment: robots present but no tasks");
  const double bits = static_cast<double>(n) * std::log2(static_cast<double>(m_count));
  if (bits > settings.max_search_bits)
    throw SearchSpaceTooLarge("assignment search over " + std::to_string(m_count) + "^" +
                              std::to_string(n) + " candidates exceeds the exhaustive budget");

  // Whether robot i counts toward pi_h when placed on task m.
  std::vector<char> counts_toward(n * m_count);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t m = 0; m < m_count; ++m)
      counts_toward[i * m_count + m] =
          spec.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) > spec.eps_s;

  // Lower bound on the robot part of any completion from depth d onward.
  std::vector<double> suffix_min(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;)
    suffix_min[i] = suffix_min[i + 1] + q.row(static_cast<Eigen::Index>(i)).minCoeff();

  // Depth-first in lexicographic order (last robot fastest). The mismatch is
  // non-negative, so a subtree whose bound cannot beat the incumbent under the
  // tie rule holds no candidate that the plain enumeration would have kept.
  std::vector<std::size_t> cur(n, 0);
  std::vector<int> counts(m_count, 0);
  bool have_best = false;
  auto threshold = [&] {
    return best.objective - settings.tie_tolerance * std::max(1.0, std::abs(best.objective));
  };
  auto visit = [&](auto&& self, std::size_t depth, double robots) -> void {
    if (depth == n) {
      const double mismatch = mismatch_cost(gs, pi_h_from_counts(counts, n));
      const double total = mismatch + robots;
      if (!have_best || total < threshold()) {
        best.assignment.task_of = cur;
        best.objective = total;
        best.mismatch = mismatch;
        have_best = true;
      }
      return;
    }
    for (std::size_t m = 0; m < m_count; ++m) {
      const double partial = robots + q(static_cast<Eigen::Index>(depth), static_cast<Eigen::Index>(m));
      if (have_best) {
        const double bound = partial + suffix_min[depth + 1];
        if (bound - 1e-12 * std::max(1.0, std::abs(bound)) >= threshold()) continue;
      }
      cur[depth] = m;
      const bool counted = counts_toward[depth * m_count + m] != 0;
      if (counted) ++counts[m];
      self(self, depth + 1, partial);
      if (counted) --counts[m];
    }
  };
  visit(visit, 0, 0.0);
  return best;
}

AllocationSolution solve_allocation(std::span<const Vec2> states, std::span<const TaskDef> tasks,
                                    const SpecializationState& spec, const GlobalSpec& gs,
                                    const GammaConfig& gamma, const AllocatorSettings& settings) {
  const std::size_t n = spec.num_robots();
  const std::size_t m_count = tasks.size();
  if (states.size() != n)
    throw DimensionError("solve_allocation: " + std::to_string(states.size()) +
                         " states for " + std::to_string(n) + " robots");
  if (spec.num_tasks() != m_count)
    throw DimensionError("solve_allocation: specialization has " +
                         std::to_string(spec.num_tasks()) + " columns for " +
                         std::to_string(m_count) + " tasks");
  if (n > 0 && m_count == 0) throw DimensionError("solve_allocation: robots present but no tasks");
  if (n > 0 && static_cast<double>(n) * std::log2(static_cast<double>(m_count)) >
                   settings.max_search_bits)
    throw SearchSpaceTooLarge("assignment search over " + std::to_string(m_count) + "^" +
                              std::to_string(n) + " candidates exceeds the exhaustive budget");

  const auto nn = static_cast<Eigen::Index>(n);
  const auto mm = static_cast<Eigen::Index>(m_count);
  AllocationSolution sol;
  sol.robot_task_costs = Eigen::MatrixXd::Zero(nn, mm);
  sol.qp_iterations = Eigen::MatrixXi::Zero(nn, mm);
  std::vector<Eigen::VectorXd> z_table(n * m_count);

  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd s_row = spec.values.row(static_cast<Eigen::Index>(i)).transpose();
    for (std::size_t m = 0; m < m_count; ++m) {
      const QpProblem qp = build_robot_qp(i, m, states, tasks, spec, gs, gamma);
      QpSolution qs = solve_qp(qp, settings.qp);
      if (qs.status == QpStatus::Infeasible)
        throw QpInfeasibleError(i, m,
                                "robot " + std::to_string(i) + " prioritizing task " +
                                    std::to_string(m) + ": QP is infeasible");
      const auto ii = static_cast<Eigen::Index>(i);
      const auto mi = static_cast<Eigen::Index>(m);
      sol.qp_iterations(ii, mi) = static_cast<int>(qs.iterations);
      sol.robot_task_costs(ii, mi) =
          robot_cost(qs.z_star.head<2>(), qs.z_star.tail(mm), s_row, gs.slack_weight);
      z_table[i * m_count + m] = std::move(qs.z_star);
    }
  }

  const AssignmentChoice choice = search_assignment(sol.robot_task_costs, spec, gs, settings);
  sol.assignment = choice.assignment;
  sol.objective_mismatch = choice.mismatch;
  sol.inputs = Eigen::MatrixXd::Zero(nn, 2);
  sol.slacks = Eigen::MatrixXd::Zero(nn, mm);
  sol.per_robot_costs = Eigen::VectorXd::Zero(nn);
  double total = choice.mismatch;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = sol.assignment.task_of[i];
    const Eigen::VectorXd& z = z_table[i * m_count + m];
    const auto ii = static_cast<Eigen::Index>(i);
    sol.inputs.row(ii) = z.head<2>().transpose();
    sol.slacks.row(ii) = z.tail(mm).transpose();
    sol.per_robot_costs[ii] = sol.robot_task_costs(ii, static_cast<Eigen::Index>(m));
    total += sol.per_robot_costs[ii];
  }
  sol.objective_total = total;
  return sol;
}

}  // namespace ata

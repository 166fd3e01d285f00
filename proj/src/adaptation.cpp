#include "ata/adaptation.hpp"

#include "ata/errors.hpp"

#include <algorithm>
#include <stdexcept>

namespace ata {

std::string_view to_string(AdaptationMode mode) {
  switch (mode) {
    case AdaptationMode::ProportionalOnly: return "proportional";
    case AdaptationMode::WithIntegral: return "integral";
  }
  return "unknown";
}

std::vector<std::string> AdaptationParams::warnings() const {
  std::vector<std::string> out;
  if (mode == AdaptationMode::WithIntegral && beta1 < 10.0 * beta2)
    out.push_back("adaptation.beta1 should be at least 10 * adaptation.beta2 in integral mode");
  return out;
}

Vec2 simulate_nominal_step(const Vec2& x_act_prev, const Vec2& u_prev, double dt) {
  return x_act_prev + u_prev * dt;
}

double delta_v(const TaskDef& task, const Vec2& x_sim, const Vec2& x_act) {
  return cost(task, x_sim).value - cost(task, x_act).value;
}

DeviationMatrix deviations(std::span<const TaskDef> tasks, std::span<const Vec2> x_sim,
                           std::span<const Vec2> x_act) {
  if (x_sim.size() != x_act.size())
    throw DimensionError("deviations: simulated and actual state counts differ");
  DeviationMatrix out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x_act.size()),
                                            static_cast<Eigen::Index>(tasks.size()))};
  for (std::size_t i = 0; i < x_act.size(); ++i)
    for (std::size_t m = 0; m < tasks.size(); ++m)
      out.dv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) =
          delta_v(tasks[m], x_sim[i], x_act[i]);
  return out;
}

SpecializationState update_specialization(const SpecializationState& spec,
                                          const Assignment& assignment,
                                          const DeviationMatrix& dev,
                                          const AdaptationParams& params,
                                          IntegralAccumulator& acc) {
  const Eigen::Index n = spec.values.rows();
  const Eigen::Index m = spec.values.cols();
  if (dev.dv.rows() != n || dev.dv.cols() != m)
    throw DimensionError("update_specialization: deviation matrix shape differs");
  if (assignment.task_of.size() != static_cast<std::size_t>(n))
    throw DimensionError("update_specialization: assignment length differs");
  const bool integral = params.mode == AdaptationMode::WithIntegral;
  if (integral) {
    if (params.s_bar.rows() != n || params.s_bar.cols() != m)
      throw DimensionError("update_specialization: s_bar shape differs");
    if (acc.acc.rows() != n || acc.acc.cols() != m)
      throw DimensionError("update_specialization: accumulator shape differs");
  }

  SpecializationState next = spec;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto assigned = static_cast<Eigen::Index>(assignment.task_of[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m; ++j) {
      double s = spec.values(i, j);
      bool touched = false;
      if (j == assigned) {
        s += params.beta1 * dev.dv(i, j);
        touched = true;
      }
      if (integral) {
        acc.acc(i, j) = (1.0 - params.leak) * (acc.acc(i, j) + (params.s_bar(i, j) - spec.values(i, j)) * params.dt);
        s += params.beta2 * acc.acc(i, j);
        touched = true;
      }
      if (touched) next.values(i, j) = std::clamp(s, 0.0, spec.s_max);
    }
  }
  return next;
}

double disturbance_occupancy(std::span<const TraceRecord> trace, double dt, double eps) {
  if (trace.size() < 2)
    throw std::invalid_argument("disturbance_occupancy: at least two records are required");
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const TraceRecord& prev = trace[k - 1];
    const TraceRecord& cur = trace[k];
    const Eigen::Index n = std::min(prev.x_act.rows(), cur.x_act.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector2d v = (cur.x_act.row(i) - prev.x_act.row(i)).transpose() / dt;
      if ((v - prev.u.row(i).transpose()).norm() > eps) ++hits;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace ata

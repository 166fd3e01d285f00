#ifndef ATA_TASK_MODELS_HPP
#define ATA_TASK_MODELS_HPP

#include <Eigen/Core>

#include <cstddef>
#include <string_view>

namespace ata {

using Vec2 = Eigen::Vector2d;

enum class TaskKind { GoToGoal };

/// A go-to-goal task. Its cost is the squared distance to the goal (m^2).
struct TaskDef {
  std::size_t id = 0;
  TaskKind kind = TaskKind::GoToGoal;
  Vec2 goal = Vec2::Zero();
};

enum class GammaForm { Linear, Cubic };

std::string_view to_string(GammaForm form);

/// Extended class-K function: gain * h (Linear) or gain * h^3 (Cubic).
struct GammaConfig {
  GammaForm form = GammaForm::Linear;
  double gain = 1.0;

  double operator()(double h) const;
};

struct CostEval {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
};

/// coeff_u . u >= rhs_base - delta
struct ConstraintRow {
  Vec2 coeff_u = Vec2::Zero();
  double rhs_base = 0.0;

  /// How much the row is violated by u with slack delta (<= 0 when satisfied).
  double violation(const Vec2& u, double delta) const { return rhs_base - delta - coeff_u.dot(u); }
};

/// Throws std::invalid_argument on non-finite state.
CostEval cost(const TaskDef& task, const Vec2& state);

/**
 * Barrier row for h = -V under single-integrator dynamics (f = 0, g = I):
 * L_f h = 0 and L_g h = -grad V, so the row reads
 * -grad V(x) . u >= -gamma(-V(x)) - delta.
 */
ConstraintRow barrier_row(const TaskDef& task, const Vec2& state, const GammaConfig& gamma);

}  // namespace ata

#endif  // ATA_TASK_MODELS_HPP

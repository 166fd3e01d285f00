#include "ata/task_models.hpp"

#include <stdexcept>

namespace ata {

std::string_view to_string(GammaForm form) {
  switch (form) {
    case GammaForm::Linear: return "linear";
    case GammaForm::Cubic: return "cubic";
  }
  return "unknown";
}

double GammaConfig::operator()(double h) const {
  switch (form) {
    case GammaForm::Linear: return gain * h;
    case GammaForm::Cubic: return gain * h * h * h;
  }
  return gain * h;
}

CostEval cost(const TaskDef& task, const Vec2& state) {
  if (!state.allFinite()) throw std::invalid_argument("cost: non-finite state");
  const Vec2 e = state - task.goal;
  return CostEval{e.squaredNorm(), 2.0 * e};
}

ConstraintRow barrier_row(const TaskDef& task, const Vec2& state, const GammaConfig& gamma) {
  const CostEval c = cost(task, state);
  ConstraintRow row;
  row.coeff_u = -c.gradient;
  row.rhs_base = -gamma(-c.value);
  return row;
}

}  // namespace ata

#include "ata/trace.hpp"

namespace ata {
namespace {

template <typename M>
bool same(const M& a, const M& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

bool operator==(const TraceRecord& a, const TraceRecord& b) {
  return a.step == b.step && a.time == b.time && same(a.x_act, b.x_act) &&
         same(a.x_sim, b.x_sim) && same(a.u, b.u) && a.task_of == b.task_of &&
         same(a.slacks, b.slacks) && same(a.spec, b.spec) && same(a.costs, b.costs) &&
         same(a.delta_v, b.delta_v) && same(a.pi_h, b.pi_h) &&
         a.objective_total == b.objective_total &&
         a.objective_mismatch == b.objective_mismatch && a.reassigned == b.reassigned &&
         a.qp_iterations == b.qp_iterations;
}

}  // namespace ata

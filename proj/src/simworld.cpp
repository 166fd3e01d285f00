#include "ata/simworld.hpp"

#include "ata/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ata {

std::string_view to_string(RobotClass c) {
  return c == RobotClass::Ground ? "ground" : "aerial";
}

std::optional<RobotClass> parse_robot_class(std::string_view s) {
  if (s == "ground") return RobotClass::Ground;
  if (s == "aerial") return RobotClass::Aerial;
  return std::nullopt;
}

namespace {

bool in_ring(const Vec2& center, double r_in, double r_out, const Vec2& p) {
  const double d = (p - center).norm();
  return d >= r_in && d <= r_out;
}

// Small slack so that times landing exactly on a step boundary are not
// pushed one step later by rounding in t / dt.
std::uint64_t ceil_steps(double t, double dt) {
  const double r = t / dt;
  const double c = std::ceil(r - 1e-9 * std::max(1.0, std::abs(r)));
  return c <= 0.0 ? 0 : static_cast<std::uint64_t>(c);
}

}  // namespace

bool contains(const Geometry& g, const Vec2& p) {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return (p - s.center).norm() <= s.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return in_ring(s.center, s.r_in, s.r_out, p);
        } else if constexpr (std::is_same_v<T, AnnularSector>) {
          return in_ring(s.center, s.r_in, s.r_out, p);
        } else {
          return (p.array() >= s.min.array()).all() && (p.array() <= s.max.array()).all();
        }
      },
      g);
}

bool heading_matches(const Geometry& g, const Vec2& u) {
  const auto* sector = std::get_if<AnnularSector>(&g);
  if (sector == nullptr) return true;
  if (u.x() == 0.0 && u.y() == 0.0) return false;
  const double a = std::atan2(u.y(), u.x());
  if (sector->angle_from <= sector->angle_to)
    return a >= sector->angle_from && a <= sector->angle_to;
  return a >= sector->angle_from || a <= sector->angle_to;
}

std::uint64_t event_step(double time, double dt) { return ceil_steps(time, dt); }

double mobility(RobotClass cls, const Vec2& x, const Vec2& u,
                std::span<const DisturbanceRegion> regions, double dt) {
  double mu = 1.0;
  const Vec2 end = x + u * dt;
  for (const DisturbanceRegion& r : regions) {
    if (!r.active || !r.affected.contains(cls) || r.mu >= mu) continue;
    if (!contains(r.geometry, x) && !contains(r.geometry, end)) continue;
    if (!heading_matches(r.geometry, u)) continue;
    mu = r.mu;
  }
  return mu;
}

Vec2 actual_step(const RobotModel& robot, const Vec2& u,
                 std::span<const DisturbanceRegion> regions, double dt,
                 const WorldBounds& bounds) {
  const double mu = mobility(robot.cls, robot.x_act, u, regions, dt);
  const Vec2 next = mu == 1.0 ? Vec2(robot.x_act + u * dt) : Vec2(robot.x_act + (mu * u) * dt);
  return next.cwiseMax(bounds.min).cwiseMin(bounds.max);
}

std::uint64_t Scenario::num_steps() const { return ceil_steps(t_final, dt()); }

namespace {

void apply_event(const ScheduleEvent& ev, std::vector<DisturbanceRegion>& regions,
                 std::vector<TaskDef>& tasks) {
  if (const auto* g = std::get_if<SetGoal>(&ev.action)) {
    const std::size_t idx = std::stoul(ev.target);
    if (idx >= tasks.size()) throw Error("schedule event names unknown task " + ev.target);
    tasks[idx].goal = g->goal;
    return;
  }
  for (DisturbanceRegion& r : regions) {
    if (r.name != ev.target) continue;
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, SetActive>) r.active = a.active;
          else if constexpr (std::is_same_v<T, SetClasses>) r.affected = a.classes;
          else if constexpr (std::is_same_v<T, SetMu>) r.mu = a.mu;
        },
        ev.action);
    return;
  }
  throw Error("schedule event names unknown region " + ev.target);
}

}  // namespace

Trace run_scenario(const Scenario& sc, const RunOptions& options) {
  Trace trace;
  const std::size_t n = sc.num_robots();
  const std::size_t m_count = sc.num_tasks();
  if (n == 0) return trace;

  const double dt = sc.dt();
  std::uint64_t steps = sc.num_steps();
  if (options.until) steps = std::min(steps, ceil_steps(*options.until, dt));

  std::vector<TaskDef> tasks = sc.tasks;
  std::vector<DisturbanceRegion> regions = sc.regions;
  std::vector<std::size_t> order(sc.schedule.size());
  for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sc.schedule[a].time < sc.schedule[b].time;
  });
  std::size_t next_event = 0;

  std::vector<RobotModel> robots(n);
  for (std::size_t i = 0; i < n; ++i) {
    robots[i].id = sc.robots[i].id;
    robots[i].cls = sc.robots[i].cls;
    robots[i].x_act = sc.robots[i].position;
    robots[i].x_sim = sc.robots[i].position;
  }

  SpecializationState spec = sc.spec_init;
  IntegralAccumulator acc = IntegralAccumulator::zeros(static_cast<Eigen::Index>(n),
                                                       static_cast<Eigen::Index>(m_count));
  AllocatorSettings alloc;
  alloc.qp = sc.qp;
  Assignment previous;
  std::vector<Vec2> x_act(n), x_sim(n);
  trace.reserve(static_cast<std::size_t>(steps));

  const auto nn = static_cast<Eigen::Index>(n);
  const auto mm = static_cast<Eigen::Index>(m_count);
  for (std::uint64_t k = 0; k < steps; ++k) {
    while (next_event < order.size() &&
           event_step(sc.schedule[order[next_event]].time, dt) <= k) {
      apply_event(sc.schedule[order[next_event]], regions, tasks);
      ++next_event;
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (k > 0) robots[i].x_sim = simulate_nominal_step(x_act[i], robots[i].u_last, dt);
      x_act[i] = robots[i].x_act;
      x_sim[i] = robots[i].x_sim;
    }
    DeviationMatrix dev{Eigen::MatrixXd::Zero(nn, mm)};
    if (k > 0) {
      dev = deviations(tasks, x_sim, x_act);
      spec = update_specialization(spec, previous, dev, sc.adaptation, acc);
    }

    AllocationSolution sol;
    try {
      sol = solve_allocation(x_act, tasks, spec, sc.global, sc.gamma, alloc);
    } catch (const Error& e) {
      throw StepError(static_cast<std::size_t>(k),
                      "step " + std::to_string(k) + ": " + e.what());
    }

    TraceRecord rec;
    rec.step = k;
    rec.time = static_cast<double>(k) * dt;
    rec.x_act.resize(nn, 2);
    rec.x_sim.resize(nn, 2);
    rec.costs.resize(nn, mm);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      rec.x_act.row(ii) = x_act[i].transpose();
      rec.x_sim.row(ii) = x_sim[i].transpose();
      for (std::size_t m = 0; m < m_count; ++m)
        rec.costs(ii, static_cast<Eigen::Index>(m)) = cost(tasks[m], x_act[i]).value;
    }
    rec.u = sol.inputs;
    rec.task_of = sol.assignment.task_of;
    rec.slacks = sol.slacks;
    rec.spec = spec.values;
    rec.delta_v = dev.dv;
    rec.pi_h = pi_h(spec, sol.assignment);
    rec.objective_total = sol.objective_total;
    rec.objective_mismatch = sol.objective_mismatch;
    rec.reassigned = k > 0 && !(sol.assignment == previous);
    rec.qp_iterations = sol.qp_iterations.cast<std::int64_t>().sum();
    trace.push_back(std::move(rec));

    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 u = sol.inputs.row(static_cast<Eigen::Index>(i)).transpose();
      robots[i].x_act = actual_step(robots[i], u, regions, dt, sc.bounds);
      robots[i].u_last = u;
    }
    previous = sol.assignment;
  }
  return trace;
}

SummaryOptions summary_options(const Scenario& sc) {
  SummaryOptions o;
  o.dt = sc.dt();
  o.occupancy_eps = sc.occupancy_eps;
  o.completion_threshold = sc.completion_threshold;
  return o;
}

Summary summarize(std::span<const TraceRecord> trace, const SummaryOptions& opt) {
  if (trace.empty()) throw std::invalid_argument("summarize: empty trace");
  // Steps are monotone, so the window is a contiguous slice.
  std::size_t lo = 0;
  while (lo < trace.size() && trace[lo].step < opt.first_step) ++lo;
  std::size_t hi = lo;
  while (hi < trace.size() && trace[hi].step < opt.last_step) ++hi;
  const std::span<const TraceRecord> window = trace.subspan(lo, hi - lo);
  if (window.empty()) throw std::invalid_argument("summarize: no records in the requested window");

  Summary s;
  s.num_steps = window.size();
  const auto m_count = static_cast<std::size_t>(window.front().costs.cols());
  s.completion.resize(m_count);
  for (const TraceRecord& r : window) {
    if (r.reassigned) ++s.reassignments;
    for (std::size_t i = 0; i < r.task_of.size(); ++i) {
      const std::size_t m = r.task_of[i];
      if (m >= m_count || s.completion[m].step) continue;
      if (r.costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) <
          opt.completion_threshold) {
        s.completion[m].step = r.step;
        s.completion[m].time = r.time;
        s.completion[m].robot = i;
      }
    }
  }
  for (const auto& c : s.completion)
    if (c.step) ++s.tasks_completed;
  s.final_spec = window.back().spec;
  if (window.size() >= 2) s.occupancy = disturbance_occupancy(window, opt.dt, opt.occupancy_eps);
  return s;
}

}  // namespace ata

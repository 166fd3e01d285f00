#ifndef ATA_SIMWORLD_HPP
#define ATA_SIMWORLD_HPP

/**
 * @file
 * @brief Planar world with disturbance regions and the closed allocation loop.
 *
 * Every step k:
 *   1. apply schedule events with ceil(t / dt) <= k,
 *   2. predict x_sim[k] = x_act[k-1] + u[k-1] dt,
 *   3. update the specialization from V(x_sim) - V(x_act),
 *   4. solve the allocation with the updated values,
 *   5. record the step,
 *   6. move every robot with the disturbed dynamics.
 */

#include "ata/adaptation.hpp"
#include "ata/allocator.hpp"
#include "ata/task_models.hpp"
#include "ata/trace.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ata {

enum class RobotClass { Ground, Aerial };

std::string_view to_string(RobotClass c);
std::optional<RobotClass> parse_robot_class(std::string_view s);

struct ClassSet {
  bool ground = false;
  bool aerial = false;

  bool contains(RobotClass c) const { return c == RobotClass::Ground ? ground : aerial; }
  friend bool operator==(const ClassSet&, const ClassSet&) = default;
};

struct RobotModel {
  std::size_t id = 0;
  RobotClass cls = RobotClass::Ground;
  Vec2 x_act = Vec2::Zero();
  Vec2 x_sim = Vec2::Zero();
  Vec2 u_last = Vec2::Zero();
};

struct Disk {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

struct Annulus {
  Vec2 center = Vec2::Zero();
  double r_in = 0.0;
  double r_out = 0.0;
};

/// Annulus that only acts when the commanded heading lies in [angle_from, angle_to]
/// (radians, counter-clockwise, wrapping through +-pi when angle_from > angle_to).
struct AnnularSector {
  Vec2 center = Vec2::Zero();
  double r_in = 0.0;
  double r_out = 0.0;
  double angle_from = 0.0;
  double angle_to = 0.0;
};

struct Rect {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();
};

using Geometry = std::variant<Disk, Annulus, AnnularSector, Rect>;

/// Point-in-geometry test; sector headings are not considered here.
bool contains(const Geometry& g, const Vec2& p);

/// True when an AnnularSector's heading window admits the direction of u.
/// Other geometries always return true; u = 0 has no heading and returns false.
bool heading_matches(const Geometry& g, const Vec2& u);

struct DisturbanceRegion {
  std::string name;
  Geometry geometry;
  ClassSet affected;
  double mu = 1.0;  ///< 0 impassable, 1 no effect
  bool active = true;
};

struct WorldBounds {
  Vec2 min = Vec2(-1.6, -1.0);
  Vec2 max = Vec2(1.6, 1.0);

  bool contains(const Vec2& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct SetActive {
  bool active = true;
};
struct SetClasses {
  ClassSet classes;
};
struct SetMu {
  double mu = 1.0;
};
/// Moves a task goal (target is the task index rendered as a string).
struct SetGoal {
  Vec2 goal = Vec2::Zero();
};

using ScheduleAction = std::variant<SetActive, SetClasses, SetMu, SetGoal>;

struct ScheduleEvent {
  double time = 0.0;
  std::string target;  ///< region name, or task index for SetGoal
  ScheduleAction action;
};

/// First step at which an event at `time` takes effect: ceil(time / dt).
std::uint64_t event_step(double time, double dt);

/**
 * Mobility factor for a robot at x commanded with u: the minimum mu over
 * active regions affecting its class that contain x or the nominal endpoint
 * x + u dt (sector regions additionally require a matching heading).
 */
double mobility(RobotClass cls, const Vec2& x, const Vec2& u,
                std::span<const DisturbanceRegion> regions, double dt);

/// x + mu u dt, clipped to the world bounds. With mu = 1 the unclipped value
/// is bit-identical to simulate_nominal_step.
Vec2 actual_step(const RobotModel& robot, const Vec2& u,
                 std::span<const DisturbanceRegion> regions, double dt,
                 const WorldBounds& bounds = {});

struct RobotSpec {
  std::size_t id = 0;
  RobotClass cls = RobotClass::Ground;
  Vec2 position = Vec2::Zero();
};

struct Scenario {
  std::string name;
  std::vector<RobotSpec> robots;
  std::vector<TaskDef> tasks;
  std::vector<DisturbanceRegion> regions;
  std::vector<ScheduleEvent> schedule;
  SpecializationState spec_init;  ///< carries s_max and eps_s
  GlobalSpec global;
  AdaptationParams adaptation;  ///< adaptation.dt is the loop interval
  GammaConfig gamma;
  double t_final = 30.0;
  double occupancy_eps = 0.05;  ///< m/s
  double completion_threshold = 2.5e-3;  ///< m^2
  QpSettings qp;
  WorldBounds bounds;

  double dt() const { return adaptation.dt; }
  std::size_t num_robots() const { return robots.size(); }
  std::size_t num_tasks() const { return tasks.size(); }
  /// ceil(t_final / dt)
  std::uint64_t num_steps() const;
};

struct RunOptions {
  std::optional<double> until;  ///< stop early at this simulated time (s)
};

/// Throws StepError (wrapping allocator failures) with the step index.
Trace run_scenario(const Scenario& scenario, const RunOptions& options = {});

struct TaskCompletion {
  std::optional<std::uint64_t> step;
  std::optional<double> time;
  std::optional<std::size_t> robot;
};

struct Summary {
  std::size_t num_steps = 0;
  std::vector<TaskCompletion> completion;
  std::size_t tasks_completed = 0;
  std::size_t reassignments = 0;
  Eigen::MatrixXd final_spec;
  std::optional<double> occupancy;  ///< absent for traces shorter than two records

  bool all_completed() const { return tasks_completed == completion.size(); }
};

struct SummaryOptions {
  double dt = 0.033;
  double occupancy_eps = 0.05;
  double completion_threshold = 2.5e-3;
  std::uint64_t first_step = 0;  ///< completion window [first_step, last_step)
  std::uint64_t last_step = UINT64_MAX;
};

SummaryOptions summary_options(const Scenario& scenario);

/// Throws std::invalid_argument for an empty trace.
Summary summarize(std::span<const TraceRecord> trace, const SummaryOptions& options);

}  // namespace ata

#endif  // ATA_SIMWORLD_HPP

#include "ata/errors.hpp"
#include "ata/scenario_io.hpp"
#include "ata/simworld.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ata;

namespace {

DisturbanceRegion region(Geometry g, ClassSet cls, double mu, std::string name = "r") {
  DisturbanceRegion r;
  r.name = std::move(name);
  r.geometry = g;
  r.affected = cls;
  r.mu = mu;
  return r;
}

constexpr ClassSet kGround{true, false};
constexpr ClassSet kBoth{true, true};

Scenario two_robot_scenario(const std::string& extra = "") {
  return load_scenario(R"({
    "name": "t", "dt": 0.05, "t_final": 3.0,
    "robots": [{"class": "ground", "position": [-0.8, -0.5]},
               {"class": "aerial", "position": [0.8, -0.5]}],
    "tasks": [{"goal": [-0.5, 0.4]}, {"goal": [0.5, 0.4]}])" + extra + "}");
}

}  // namespace

TEST_CASE("actual_step reference cases") {
  RobotModel r;
  r.x_act = Vec2(0.1, 0.2);
  const Vec2 u(0.2, -0.1);
  const double dt = 0.033;

  SUBCASE("no regions is the nominal step") { CHECK(actual_step(r, u, {}, dt) == r.x_act + u * dt); }
  SUBCASE("inside an impassable annulus") {
    const std::vector<DisturbanceRegion> regs{
        region(Annulus{Vec2(0.0, 0.0), 0.1, 0.5}, kGround, 0.0)};
    CHECK(actual_step(r, u, regs, dt) == r.x_act);
  }
  SUBCASE("class filter") {
    r.cls = RobotClass::Aerial;
    const std::vector<DisturbanceRegion> regs{
        region(Annulus{Vec2(0.0, 0.0), 0.1, 0.5}, kGround, 0.0)};
    CHECK(actual_step(r, u, regs, dt) == r.x_act + u * dt);
  }
  SUBCASE("partial mobility scales the step") {
    const std::vector<DisturbanceRegion> regs{region(Disk{Vec2(0.0, 0.0), 1.0}, kBoth, 0.25)};
    const Vec2 next = actual_step(r, u, regs, dt);
    CHECK(next.x() == doctest::Approx(0.1 + 0.25 * 0.2 * dt));
    CHECK(next.y() == doctest::Approx(0.2 - 0.25 * 0.1 * dt));
  }
  SUBCASE("overlapping regions use the smallest mobility") {
    const std::vector<DisturbanceRegion> regs{region(Disk{Vec2(0.0, 0.0), 1.0}, kBoth, 0.5, "a"),
                                              region(Rect{Vec2(0, 0), Vec2(1, 1)}, kBoth, 0.2, "b")};
    CHECK(mobility(RobotClass::Ground, r.x_act, u, regs, dt) == 0.2);
  }
  SUBCASE("inactive regions are ignored") {
    auto reg = region(Disk{Vec2(0.0, 0.0), 1.0}, kBoth, 0.0);
    reg.active = false;
    const std::vector<DisturbanceRegion> regs{reg};
    CHECK(actual_step(r, u, regs, dt) == r.x_act + u * dt);
  }
  SUBCASE("an impassable region cannot be entered") {
    r.x_act = Vec2(-0.5 - 0.004, 0.0);
    const std::vector<DisturbanceRegion> regs{region(Disk{Vec2(0.0, 0.0), 0.5}, kBoth, 0.0)};
    CHECK(actual_step(r, Vec2(0.2, 0.0), regs, dt) == r.x_act);
    // Moving away is free.
    CHECK(actual_step(r, Vec2(-0.2, 0.0), regs, dt) == r.x_act + Vec2(-0.2, 0.0) * dt);
  }
  SUBCASE("world bounds clip the result") {
    r.x_act = Vec2(1.599, 0.0);
    const Vec2 next = actual_step(r, Vec2(0.2, 0.0), {}, dt);
    CHECK(next.x() == 1.6);
  }
}

TEST_CASE("annular sector heading window") {
  const AnnularSector up{Vec2(0.0, 0.0), 0.1, 1.0, std::numbers::pi / 4, 3 * std::numbers::pi / 4};
  CHECK(heading_matches(up, Vec2(0.0, 1.0)));
  CHECK_FALSE(heading_matches(up, Vec2(1.0, 0.0)));
  CHECK_FALSE(heading_matches(up, Vec2(0.0, -1.0)));
  CHECK_FALSE(heading_matches(up, Vec2::Zero()));

  // Window wrapping through +-pi.
  const AnnularSector left{Vec2(0.0, 0.0), 0.1, 1.0, 3 * std::numbers::pi / 4,
                           -3 * std::numbers::pi / 4};
  CHECK(heading_matches(left, Vec2(-1.0, 0.0)));
  CHECK(heading_matches(left, Vec2(-1.0, -0.1)));
  CHECK_FALSE(heading_matches(left, Vec2(1.0, 0.0)));

  // Non-sector shapes accept every heading.
  CHECK(heading_matches(Disk{Vec2::Zero(), 1.0}, Vec2(0.3, -0.7)));

  RobotModel r;
  r.x_act = Vec2(0.0, 0.5);
  const std::vector<DisturbanceRegion> regs{region(up, kBoth, 0.0)};
  CHECK(actual_step(r, Vec2(0.0, 0.2), regs, 0.033) == r.x_act);
  CHECK(actual_step(r, Vec2(0.2, 0.0), regs, 0.033) == r.x_act + Vec2(0.2, 0.0) * 0.033);
}

TEST_CASE("geometry containment") {
  CHECK(contains(Disk{Vec2(1, 1), 0.5}, Vec2(1.3, 1.3)));
  CHECK_FALSE(contains(Disk{Vec2(1, 1), 0.5}, Vec2(1.4, 1.4)));
  CHECK(contains(Annulus{Vec2(0, 0), 0.2, 0.4}, Vec2(0.3, 0.0)));
  CHECK_FALSE(contains(Annulus{Vec2(0, 0), 0.2, 0.4}, Vec2(0.1, 0.0)));
  CHECK(contains(Rect{Vec2(-1, -1), Vec2(0, 0)}, Vec2(-0.5, -0.1)));
  CHECK_FALSE(contains(Rect{Vec2(-1, -1), Vec2(0, 0)}, Vec2(0.5, -0.1)));
}

TEST_CASE("event steps round up except on exact boundaries") {
  CHECK(event_step(0.0, 0.033) == 0);
  CHECK(event_step(0.033, 0.033) == 1);
  CHECK(event_step(0.034, 0.033) == 2);
  CHECK(event_step(45.0, 0.033) == 1364);
  CHECK(event_step(0.3, 0.1) == 3);
}

TEST_CASE("zero robots give an empty trace") {
  const Scenario sc = load_scenario(R"({"tasks": [{"goal": [0, 0]}]})");
  CHECK(run_scenario(sc).empty());
}

TEST_CASE("loop bookkeeping") {
  const Scenario sc = two_robot_scenario();
  const Trace trace = run_scenario(sc);
  REQUIRE(trace.size() == sc.num_steps());
  CHECK(trace.size() == 60);
  CHECK(trace.front().x_sim == trace.front().x_act);
  const double dt = sc.dt();
  const double bound = sc.global.u_max * std::sqrt(2.0) * dt * (1.0 + 1e-12);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    CHECK(trace[k].step == k);
    CHECK(trace[k].time == doctest::Approx(static_cast<double>(k) * dt));
    if (k == 0) continue;
    const auto& prev = trace[k - 1];
    for (Eigen::Index i = 0; i < 2; ++i) {
      const Vec2 expect = simulate_nominal_step(prev.x_act.row(i).transpose(),
                                                prev.u.row(i).transpose(), dt);
      CHECK(Vec2(trace[k].x_sim.row(i).transpose()) == expect);
      CHECK((trace[k].x_act.row(i) - prev.x_act.row(i)).norm() <= bound);
    }
  }
}

TEST_CASE("schedule events apply at their step and runs are deterministic") {
  const Scenario sc = two_robot_scenario(R"(,
    "regions": [{"name": "wall", "shape": "rect", "min": [-1.6, -0.2], "max": [1.6, -0.1],
                 "classes": ["ground", "aerial"], "mu": 0.0, "active": false}],
    "schedule": [{"time": 0.5, "target": "wall", "action": "set_active", "value": true},
                 {"time": 1.0, "target": 1, "action": "set_goal", "value": [0.9, -0.8]}])");
  const Trace a = run_scenario(sc);
  const Trace b = run_scenario(sc);
  CHECK(a == b);
  // The goal move is visible in the recorded costs from step 20 onward.
  const Vec2 x = a[20].x_act.row(1).transpose();
  CHECK(a[20].costs(1, 1) == doctest::Approx((x - Vec2(0.9, -0.8)).squaredNorm()));
  const Vec2 x19 = a[19].x_act.row(1).transpose();
  CHECK(a[19].costs(1, 1) == doctest::Approx((x19 - Vec2(0.5, 0.4)).squaredNorm()));
  // Nobody crosses the wall once it is active.
  for (std::size_t k = 11; k < a.size(); ++k)
    for (Eigen::Index i = 0; i < 2; ++i) CHECK(a[k].x_act(i, 1) < -0.1 + 1e-12);
}

TEST_CASE("run_scenario honours until") {
  const Scenario sc = two_robot_scenario();
  RunOptions opt;
  opt.until = 1.0;
  const Trace t = run_scenario(sc, opt);
  CHECK(t.size() == 20);
  const Trace full = run_scenario(sc);
  CHECK(t.back() == full[19]);
}

TEST_CASE("summarize") {
  const Scenario sc = two_robot_scenario();
  const Trace trace = run_scenario(sc);

  SUBCASE("unreachable goals report absent completion") {
    const Summary s = summarize(trace, summary_options(sc));
    CHECK(s.num_steps == 60);
    for (const auto& c : s.completion) {
      CHECK_FALSE(c.step.has_value());
      CHECK_FALSE(c.time.has_value());
    }
    CHECK(s.tasks_completed == 0);
    CHECK(s.final_spec == trace.back().spec);
    REQUIRE(s.occupancy.has_value());
    CHECK(*s.occupancy == 0.0);
  }
  SUBCASE("completion is the first record under the threshold") {
    SummaryOptions o = summary_options(sc);
    o.completion_threshold = 0.5;
    const Summary s = summarize(trace, o);
    for (std::size_t m = 0; m < 2; ++m) {
      REQUIRE(s.completion[m].step.has_value());
      const std::uint64_t k = *s.completion[m].step;
      const std::size_t robot = *s.completion[m].robot;
      CHECK(trace[k].task_of[robot] == m);
      CHECK(trace[k].costs(static_cast<Eigen::Index>(robot), static_cast<Eigen::Index>(m)) < 0.5);
      for (std::uint64_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < 2; ++i)
          if (trace[j].task_of[i] == m)
            CHECK(trace[j].costs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) >=
                  0.5);
    }
  }
  SUBCASE("windows") {
    SummaryOptions o = summary_options(sc);
    o.first_step = 10;
    o.last_step = 30;
    CHECK(summarize(trace, o).num_steps == 20);
    o.first_step = 100;
    o.last_step = 200;
    CHECK_THROWS_AS(summarize(trace, o), std::invalid_argument);
  }
  SUBCASE("empty trace") {
    CHECK_THROWS_AS(summarize(Trace{}, summary_options(sc)), std::invalid_argument);
  }
  SUBCASE("single record has no occupancy") {
    const Summary s = summarize(std::span(trace).first(1), summary_options(sc));
    CHECK_FALSE(s.occupancy.has_value());
  }
}

TEST_CASE("allocator failures carry the step index") {
  // A prioritization bound far too small makes every hypothesis infeasible.
  const Scenario sc = two_robot_scenario(R"(, "global": {"delta_max": 0.01, "kappa": 2})");
  try {
    (void)run_scenario(sc);
    FAIL("expected StepError");
  } catch (const StepError& e) {
    CHECK(e.step() == 0);
  }
}

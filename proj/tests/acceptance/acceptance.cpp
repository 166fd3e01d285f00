// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "ata/adaptation.hpp"
#include "ata/scenario_io.hpp"
#include "ata/simworld.hpp"
#include "ata/testing/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef ATA_SCENARIO_DIR
#error "ATA_SCENARIO_DIR must be defined"
#endif

namespace fs = std::filesystem;
using namespace ata;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Run {
  Scenario scenario;
  Trace trace;
  double seconds = 0.0;
};

std::map<std::string, Run> g_runs;

const Run& run_bundled(const std::string& name) {
  auto it = g_runs.find(name);
  if (it != g_runs.end()) return it->second;
  Run r;
  r.scenario = load_scenario_file(fs::path(ATA_SCENARIO_DIR) / (name + ".json"));
  const auto t0 = std::chrono::steady_clock::now();
  r.trace = run_scenario(r.scenario);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return g_runs.emplace(name, std::move(r)).first->second;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

Vec2 position(const TraceRecord& r, Eigen::Index i) { return r.x_act.row(i).transpose(); }

Outcome criterion1() {
  const Run& r = run_bundled("example1");
  const auto& sc = r.scenario;
  Outcome o;
  const bool spec_ok = sc.spec_init.values(0, 0) == 1.0 && sc.spec_init.values(0, 1) == 0.0 &&
                       sc.spec_init.values(1, 0) == 1.0 && sc.spec_init.values(1, 1) == 1.0 &&
                       sc.global.pi_star[0] == 0.5 && sc.global.pi_star[1] == 0.5;
  const bool first_ok = !r.trace.empty() && r.trace[0].task_of == std::vector<std::size_t>{0, 1};
  const Summary s = summarize(r.trace, summary_options(sc));
  double d0 = 0, d1 = 0;
  const auto& last = r.trace.back();
  d0 = (position(last, 0) - sc.tasks[0].goal).norm();
  d1 = (position(last, 1) - sc.tasks[1].goal).norm();
  const bool reach = s.all_completed() && d0 <= 0.05 && d1 <= 0.05 && r.scenario.t_final == 30.0;
  o.pass = spec_ok && first_ok && reach && r.seconds < 5.0;
  o.detail = "step-0 assignment " + std::string(first_ok ? "(r1->T1, r2->T2)" : "WRONG") +
             ", completion t = " + (s.completion[0].time ? fmt(*s.completion[0].time) : "-") + " / " +
             (s.completion[1].time ? fmt(*s.completion[1].time) : "-") + " s, final distances " +
             fmt(d0, 3) + " / " + fmt(d1, 3) + " m, runtime " + fmt(r.seconds, 3) + " s";
  return o;
}

Outcome criterion2() {
  const Run& r = run_bundled("example2");
  const auto& t = r.trace;
  const auto& sc = r.scenario;
  bool monotone = true;
  std::size_t blocked_steps = 0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (t[k - 1].task_of[0] != 0) continue;
    const bool blocked = position(t[k], 0) == position(t[k - 1], 0) &&
                         t[k - 1].u.row(0).norm() > 0.0;
    if (!blocked) continue;
    ++blocked_steps;
    if (t[k].spec(0, 0) > t[k - 1].spec(0, 0)) monotone = false;
  }
  const bool annulus = sc.regions.size() == 1 &&
                       std::holds_alternative<Annulus>(sc.regions[0].geometry) &&
                       sc.regions[0].mu == 0.0 && sc.regions[0].affected.contains(sc.robots[0].cls) &&
                       contains(sc.regions[0].geometry,
                                std::get<Annulus>(sc.regions[0].geometry).center +
                                    Vec2(std::get<Annulus>(sc.regions[0].geometry).r_out, 0.0)) &&
                       (std::get<Annulus>(sc.regions[0].geometry).center - sc.tasks[0].goal).norm() ==
                           0.0;
  const Summary s = summarize(t, summary_options(sc));
  Outcome o;
  o.pass = annulus && monotone && blocked_steps > 0 && s.reassignments >= 1 && s.all_completed() &&
           sc.t_final == 60.0;
  o.detail = std::to_string(blocked_steps) + " blocked steps, s11 non-increasing: " +
             (monotone ? "yes" : "no") + ", reassignments " + std::to_string(s.reassignments) +
             ", tasks completed " + std::to_string(s.tasks_completed) + "/2";
  return o;
}

Outcome criterion3() {
  const Run& r = run_bundled("example3");
  const auto& t = r.trace;
  const auto& sc = r.scenario;
  std::size_t first_switch = 0;
  for (std::size_t k = 1; k < t.size(); ++k)
    if (t[k].reassigned) {
      first_switch = k;
      break;
    }
  // Recovery: first step after the switch with s11 back within 0.2 of s_bar.
  // Return: start of the final stretch during which robot 1 stays on task 1.
  const double s_bar = sc.adaptation.s_bar(0, 0);
  std::size_t recovered = 0;
  double peak = -1.0;
  for (std::size_t k = first_switch + 1; first_switch > 0 && k < t.size(); ++k) {
    peak = std::max(peak, t[k].spec(0, 0));
    if (recovered == 0 && std::abs(t[k].spec(0, 0) - s_bar) <= 0.2) recovered = k;
  }
  std::size_t back = 0;
  if (first_switch > 0 && t.back().task_of[0] == 0) {
    back = t.size() - 1;
    while (back > first_switch && t[back - 1].task_of[0] == 0) --back;
  }
  const bool setup = sc.adaptation.mode == AdaptationMode::WithIntegral &&
                     sc.adaptation.s_bar(0, 0) == 1.0 && !sc.regions.empty() &&
                     std::holds_alternative<AnnularSector>(sc.regions[0].geometry);
  Outcome o;
  o.pass = setup && first_switch > 0 && t[first_switch].task_of[0] != 0 && recovered > 0 &&
           back > first_switch;
  o.detail = "first reassignment at t = " + fmt(first_switch * sc.dt()) +
             " s, s11 within 0.2 of s_bar at t = " +
             (recovered ? fmt(recovered * sc.dt()) : std::string("never")) + " s (max " +
             fmt(peak) + "), robot 1 back on task 1 for good from t = " +
             (back > first_switch ? fmt(back * sc.dt()) : std::string("never")) + " s";
  return o;
}

Outcome criterion4() {
  const Run& r = run_bundled("experiment_a");
  const auto& t = r.trace;
  const auto& sc = r.scenario;
  std::size_t aerial = 0, ground = 0;
  for (const auto& rb : sc.robots) (rb.cls == RobotClass::Aerial ? aerial : ground)++;
  // Locate the no-fly zone (aerial-only, impassable rectangle) and its goal.
  std::optional<std::size_t> nofly_task;
  bool river = false;
  for (const auto& reg : sc.regions) {
    if (!std::holds_alternative<Rect>(reg.geometry) || reg.mu != 0.0) continue;
    if (reg.affected.aerial && !reg.affected.ground) {
      for (std::size_t m = 0; m < sc.num_tasks(); ++m)
        if (contains(reg.geometry, sc.tasks[m].goal)) nofly_task = m;
    }
    if (reg.affected.ground && !reg.affected.aerial) river = true;
  }
  std::optional<std::size_t> misassigned;
  for (std::size_t i = 0; nofly_task && i < sc.num_robots(); ++i)
    if (sc.robots[i].cls == RobotClass::Aerial && t[0].task_of[i] == *nofly_task) misassigned = i;
  const Summary s = summarize(t, summary_options(sc));
  double latest = 0.0;
  for (const auto& c : s.completion)
    if (c.time) latest = std::max(latest, *c.time);
  double s_final = -1.0;
  if (misassigned && nofly_task)
    s_final = t.back().spec(static_cast<Eigen::Index>(*misassigned),
                            static_cast<Eigen::Index>(*nofly_task));
  Outcome o;
  o.pass = aerial == 3 && ground == 3 && river && nofly_task && misassigned && s.all_completed() &&
           latest <= 90.0 && s_final > 0.0 && s_final < 1.0;
  o.detail = std::to_string(s.tasks_completed) + "/6 tasks, last at t = " + fmt(latest) +
             " s, misassigned aerial robot " +
             (misassigned ? std::to_string(*misassigned + 1) : std::string("none")) +
             " ends with s = " + fmt(s_final);
  return o;
}

Outcome criterion5() {
  const Run& r = run_bundled("experiment_b");
  const auto& sc = r.scenario;
  const double half = sc.t_final / 2.0;
  bool switched = !sc.schedule.empty();
  for (const auto& ev : sc.schedule) switched = switched && ev.time == half;
  SummaryOptions before = summary_options(sc), after = summary_options(sc);
  const std::uint64_t k_switch = event_step(half, sc.dt());
  before.last_step = k_switch;
  after.first_step = k_switch;
  const Summary a = summarize(r.trace, before);
  const Summary b = summarize(r.trace, after);
  Outcome o;
  o.pass = sc.num_robots() == 4 && sc.num_tasks() == 4 && switched && a.tasks_completed == 4 &&
           b.tasks_completed >= 3;
  o.detail = "switch at t = " + fmt(half) + " s; before " + std::to_string(a.tasks_completed) +
             "/4, after " + std::to_string(b.tasks_completed) + "/4 (" +
             std::to_string(b.reassignments) + " reassignments after the switch)";
  return o;
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = testing::run_qp_oracle_suite(20240601, 100);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  o.pass = rep.ok() && rep.passed == 100 && secs < 10.0;
  o.detail = std::to_string(rep.passed) + "/100 within tolerance, runtime " + fmt(secs, 3) + " s";
  for (const auto& f : rep.failures) o.detail += "\n      " + f;
  return o;
}

Outcome criterion7() {
  const auto rep = testing::run_miqp_oracle_suite(7, 20);
  Outcome o;
  o.pass = rep.ok() && rep.passed == 20;
  o.detail = std::to_string(rep.passed) + "/20 instances match the monolithic brute force";
  for (const auto& f : rep.failures) o.detail += "\n      " + f;
  return o;
}

Outcome criterion8() {
  int ok = 0;
  auto one = [](double v) {
    SpecializationState s;
    s.values = Eigen::MatrixXd::Constant(1, 1, v);
    return s;
  };
  auto dev = [](double v) { return DeviationMatrix{Eigen::MatrixXd::Constant(1, 1, v)}; };
  {
    // Gate: unassigned entry untouched.
    SpecializationState s;
    s.values = Eigen::MatrixXd(1, 2);
    s.values << 0.7, 0.4;
    AdaptationParams p;
    p.beta1 = 0.5;
    auto acc = IntegralAccumulator::zeros(1, 2);
    const auto out = update_specialization(s, Assignment{{0}},
                                           DeviationMatrix{Eigen::MatrixXd::Constant(1, 2, -0.3)}, p, acc);
    ok += out.values(0, 1) == 0.4;
  }
  {
    AdaptationParams p;
    p.beta1 = 0.5;
    auto acc = IntegralAccumulator::zeros(1, 1);
    const auto out = update_specialization(one(1.0), Assignment{{0}}, dev(-0.19), p, acc);
    ok += std::abs(out.values(0, 0) - 0.905) <= 1e-15;
  }
  {
    AdaptationParams p;
    p.mode = AdaptationMode::WithIntegral;
    p.beta1 = 0.0;
    p.beta2 = 0.1;
    p.dt = 0.1;
    p.s_bar = Eigen::MatrixXd::Ones(1, 1);
    auto acc = IntegralAccumulator::zeros(1, 1);
    (void)update_specialization(one(1.0), Assignment{{0}}, dev(0.0), p, acc);
    const auto out = update_specialization(one(0.8), Assignment{{0}}, dev(0.0), p, acc);
    ok += std::abs(acc.acc(0, 0) - 0.02) <= 1e-15 && std::abs(out.values(0, 0) - 0.802) <= 1e-15;
  }
  {
    AdaptationParams p;
    p.beta1 = 1.0;
    auto acc = IntegralAccumulator::zeros(1, 1);
    ok += update_specialization(one(0.01), Assignment{{0}}, dev(-0.05), p, acc).values(0, 0) == 0.0;
  }

  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::cauchy_distribution<double> wild(0.0, 1.0);
  long violations = 0;
  for (int stream = 0; stream < 10000; ++stream) {
    const int n = 1 + static_cast<int>(rng() % 3), m = 1 + static_cast<int>(rng() % 3);
    SpecializationState s;
    s.s_max = 0.25 + 2.0 * u01(rng);
    s.values = Eigen::MatrixXd(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) s.values(i, j) = s.s_max * u01(rng);
    AdaptationParams p;
    p.beta1 = std::pow(10.0, 6.0 * u01(rng) - 3.0);
    if (stream % 2) {
      p.mode = AdaptationMode::WithIntegral;
      p.beta2 = std::pow(10.0, 4.0 * u01(rng) - 4.0);
      p.leak = (stream % 4 == 1) ? 0.0 : 0.5 * u01(rng);
      p.s_bar = Eigen::MatrixXd::Constant(n, m, s.s_max * u01(rng));
    }
    auto acc = IntegralAccumulator::zeros(n, m);
    for (int k = 0; k < 50; ++k) {
      DeviationMatrix d{Eigen::MatrixXd(n, m)};
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) d.dv(i, j) = wild(rng);
      Assignment a;
      for (int i = 0; i < n; ++i) a.task_of.push_back(rng() % static_cast<unsigned>(m));
      s = update_specialization(s, a, d, p, acc);
      violations += (s.values.array() < 0.0).count() + (s.values.array() > s.s_max).count();
    }
  }
  Outcome o;
  o.pass = ok == 4 && violations == 0;
  o.detail = std::to_string(ok) + "/4 reference examples exact, " + std::to_string(violations) +
             " clamp violations over 10000 streams";
  return o;
}

std::string serialize(const Run& r) {
  std::ostringstream os;
  write_trace(os, r.scenario, r.trace);
  return os.str();
}

std::vector<std::string> bundled_names() {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(ATA_SCENARIO_DIR))
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

Outcome criterion9() {
  std::size_t same = 0;
  std::string bad;
  const auto names = bundled_names();
  for (const auto& name : names) {
    const Run& first = run_bundled(name);
    Run second;
    second.scenario = load_scenario_file(fs::path(ATA_SCENARIO_DIR) / (name + ".json"));
    second.trace = run_scenario(second.scenario);
    if (serialize(first) == serialize(second)) ++same;
    else bad += " " + name;
  }
  Outcome o;
  o.pass = !names.empty() && same == names.size();
  o.detail = std::to_string(same) + "/" + std::to_string(names.size()) +
             " bundled scenarios byte-identical across two runs" + (bad.empty() ? "" : ":" + bad);
  return o;
}

Outcome criterion10() {
  std::size_t checked = 0;
  std::string bad;
  for (const auto& name : bundled_names()) {
    const Run& r = run_bundled(name);
    if (!r.scenario.regions.empty()) continue;
    ++checked;
    bool ok = r.scenario.adaptation.mode == AdaptationMode::ProportionalOnly;
    for (const auto& rec : r.trace) {
      ok = ok && (rec.delta_v.array() == 0.0).all();
      ok = ok && !rec.reassigned;
      ok = ok && rec.spec == r.scenario.spec_init.values;
    }
    if (!ok) bad += " " + name;
  }
  Outcome o;
  o.pass = checked >= 1 && bad.empty();
  o.detail = std::to_string(checked) + " region-free scenarios: dV == 0, no reassignments, spec "
             "unchanged" + (bad.empty() ? "" : std::string("; failed:") + bad);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Example 1 reproduction", criterion1},
      {"Example 2 reproduction", criterion2},
      {"Example 3 reproduction", criterion3},
      {"Experiment A analog", criterion4},
      {"Experiment B analog", criterion5},
      {"QP oracle suite", criterion6},
      {"MIQP oracle suite", criterion7},
      {"Update-law arithmetic", criterion8},
      {"Determinism", criterion9},
      {"Nominal neutrality", criterion10},
  };
  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (c + 1) << ": "
              << criteria[c].first << " -- " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " acceptance criteria passed\n";
  return failed == 0 ? 0 : 1;
}

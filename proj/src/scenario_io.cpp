#include "ata/scenario_io.hpp"

#include "ata/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace ata {
namespace {

using json = nlohmann::json;

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

// Type errors abort with a ParseError; range problems go to the issue list.
class Reader {
public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  const json& object(const json& j, const std::string& path) const {
    if (!j.is_object()) throw ParseError(path, "expected an object");
    return j;
  }

  const json& array(const json& j, const std::string& path) const {
    if (!j.is_array()) throw ParseError(path, "expected an array");
    return j;
  }

  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) throw ParseError(path, "expected a number");
    return j.get<double>();
  }

  bool boolean(const json& j, const std::string& path) const {
    if (!j.is_boolean()) throw ParseError(path, "expected true or false");
    return j.get<bool>();
  }

  std::string string(const json& j, const std::string& path) const {
    if (!j.is_string()) throw ParseError(path, "expected a string");
    return j.get<std::string>();
  }

  std::size_t count(const json& j, const std::string& path) const {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
      throw ParseError(path, "expected a nonnegative integer");
    return j.get<std::size_t>();
  }

  Vec2 vec2(const json& j, const std::string& path) const {
    if (!j.is_array() || j.size() != 2) throw ParseError(path, "expected [x, y]");
    return Vec2(number(j[0], index_path(path, 0)), number(j[1], index_path(path, 1)));
  }

  Eigen::VectorXd vector(const json& j, const std::string& path) const {
    array(j, path);
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
      v[static_cast<Eigen::Index>(i)] = number(j[i], index_path(path, i));
    return v;
  }

  Eigen::MatrixXd matrix(const json& j, const std::string& path) const {
    array(j, path);
    if (j.empty()) return Eigen::MatrixXd(0, 0);
    const std::size_t cols = array(j[0], index_path(path, 0)).size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
      const std::string rp = index_path(path, r);
      if (array(j[r], rp).size() != cols) throw ParseError(rp, "rows must have equal length");
      for (std::size_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            number(j[r][c], index_path(rp, c));
    }
    return m;
  }

  const json* find(const json& obj, const char* key) const {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  double number_or(const json& obj, const char* key, const std::string& path, double def) const {
    const json* v = find(obj, key);
    return v ? number(*v, join_path(path, key)) : def;
  }

  void known_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) issues_.push_back(join_path(path, it.key()) + ": unknown field");
    }
  }

private:
  std::vector<std::string>& issues_;
};

ClassSet read_classes(const Reader& rd, const json& j, const std::string& path,
                      std::vector<std::string>& issues) {
  rd.array(j, path);
  ClassSet cs;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string s = rd.string(j[i], index_path(path, i));
    const auto c = parse_robot_class(s);
    if (!c) {
      issues.push_back(index_path(path, i) + ": unknown robot class \"" + s +
                       "\" (expected ground or aerial)");
      continue;
    }
    (*c == RobotClass::Ground ? cs.ground : cs.aerial) = true;
  }
  return cs;
}

json classes_json(const ClassSet& cs) {
  json a = json::array();
  if (cs.ground) a.push_back("ground");
  if (cs.aerial) a.push_back("aerial");
  return a;
}

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(std::move(row));
  }
  return a;
}

DisturbanceRegion read_region(const Reader& rd, const json& j, const std::string& path,
                              std::vector<std::string>& issues) {
  rd.object(j, path);
  DisturbanceRegion r;
  const json* name = rd.find(j, "name");
  r.name = name ? rd.string(*name, join_path(path, "name")) : std::string();
  const json* shape_j = rd.find(j, "shape");
  if (!shape_j) throw ParseError(join_path(path, "shape"), "missing field");
  const std::string shape = rd.string(*shape_j, join_path(path, "shape"));

  auto need_vec = [&](const char* key) {
    const json* v = rd.find(j, key);
    if (!v) throw ParseError(join_path(path, key), "missing field");
    return rd.vec2(*v, join_path(path, key));
  };
  auto need_num = [&](const char* key) {
    const json* v = rd.find(j, key);
    if (!v) throw ParseError(join_path(path, key), "missing field");
    return rd.number(*v, join_path(path, key));
  };

  if (shape == "disk") {
    rd.known_keys(j, path, {"name", "shape", "center", "radius", "classes", "mu", "active"});
    r.geometry = Disk{need_vec("center"), need_num("radius")};
  } else if (shape == "annulus") {
    rd.known_keys(j, path, {"name", "shape", "center", "r_in", "r_out", "classes", "mu", "active"});
    r.geometry = Annulus{need_vec("center"), need_num("r_in"), need_num("r_out")};
  } else if (shape == "annular_sector") {
    rd.known_keys(j, path, {"name", "shape", "center", "r_in", "r_out", "angle_from", "angle_to",
                            "classes", "mu", "active"});
    r.geometry = AnnularSector{need_vec("center"), need_num("r_in"), need_num("r_out"),
                               need_num("angle_from"), need_num("angle_to")};
  } else if (shape == "rect") {
    rd.known_keys(j, path, {"name", "shape", "min", "max", "classes", "mu", "active"});
    r.geometry = Rect{need_vec("min"), need_vec("max")};
  } else {
    throw ParseError(join_path(path, "shape"),
                     "unknown shape \"" + shape + "\" (expected disk, annulus, annular_sector, rect)");
  }

  const json* cls = rd.find(j, "classes");
  r.affected = cls ? read_classes(rd, *cls, join_path(path, "classes"), issues)
                   : ClassSet{true, true};
  r.mu = rd.number_or(j, "mu", path, 0.0);
  const json* active = rd.find(j, "active");
  r.active = active ? rd.boolean(*active, join_path(path, "active")) : true;
  return r;
}

json region_json(const DisturbanceRegion& r) {
  json j;
  j["name"] = r.name;
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, Disk>) {
          j["shape"] = "disk";
          j["center"] = vec2_json(g.center);
          j["radius"] = g.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          j["shape"] = "annulus";
          j["center"] = vec2_json(g.center);
          j["r_in"] = g.r_in;
          j["r_out"] = g.r_out;
        } else if constexpr (std::is_same_v<T, AnnularSector>) {
          j["shape"] = "annular_sector";
          j["center"] = vec2_json(g.center);
          j["r_in"] = g.r_in;
          j["r_out"] = g.r_out;
          j["angle_from"] = g.angle_from;
          j["angle_to"] = g.angle_to;
        } else {
          j["shape"] = "rect";
          j["min"] = vec2_json(g.min);
          j["max"] = vec2_json(g.max);
        }
      },
      r.geometry);
  j["classes"] = classes_json(r.affected);
  j["mu"] = r.mu;
  j["active"] = r.active;
  return j;
}

ScheduleEvent read_event(const Reader& rd, const json& j, const std::string& path,
                         std::vector<std::string>& issues) {
  rd.object(j, path);
  rd.known_keys(j, path, {"time", "target", "action", "value"});
  ScheduleEvent ev;
  const json* time = rd.find(j, "time");
  const json* target = rd.find(j, "target");
  const json* action = rd.find(j, "action");
  const json* value = rd.find(j, "value");
  if (!time) throw ParseError(join_path(path, "time"), "missing field");
  if (!target) throw ParseError(join_path(path, "target"), "missing field");
  if (!action) throw ParseError(join_path(path, "action"), "missing field");
  if (!value) throw ParseError(join_path(path, "value"), "missing field");
  ev.time = rd.number(*time, join_path(path, "time"));
  const std::string vpath = join_path(path, "value");
  const std::string act = rd.string(*action, join_path(path, "action"));
  if (act == "set_goal") {
    ev.target = std::to_string(rd.count(*target, join_path(path, "target")));
    ev.action = SetGoal{rd.vec2(*value, vpath)};
    return ev;
  }
  ev.target = rd.string(*target, join_path(path, "target"));
  if (act == "set_active") ev.action = SetActive{rd.boolean(*value, vpath)};
  else if (act == "set_classes") ev.action = SetClasses{read_classes(rd, *value, vpath, issues)};
  else if (act == "set_mu") ev.action = SetMu{rd.number(*value, vpath)};
  else
    throw ParseError(join_path(path, "action"),
                     "unknown action \"" + act +
                         "\" (expected set_active, set_classes, set_mu, set_goal)");
  return ev;
}

json event_json(const ScheduleEvent& ev) {
  json j;
  j["time"] = ev.time;
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, SetActive>) {
          j["action"] = "set_active";
          j["value"] = a.active;
        } else if constexpr (std::is_same_v<T, SetClasses>) {
          j["action"] = "set_classes";
          j["value"] = classes_json(a.classes);
        } else if constexpr (std::is_same_v<T, SetMu>) {
          j["action"] = "set_mu";
          j["value"] = a.mu;
        } else {
          j["action"] = "set_goal";
          j["value"] = vec2_json(a.goal);
        }
      },
      ev.action);
  if (std::holds_alternative<SetGoal>(ev.action))
    j["target"] = std::stoull(ev.target);
  else
    j["target"] = ev.target;
  return j;
}

std::size_t line_of(std::string_view text, std::size_t byte, std::size_t* column) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  *column = col;
  return line;
}

void validate(const Scenario& sc, std::vector<std::string>& issues,
              std::vector<std::string>* warnings) {
  auto add = [&](const std::string& s) { issues.push_back(s); };
  const std::size_t n = sc.num_robots();
  const std::size_t m = sc.num_tasks();
  const auto nn = static_cast<Eigen::Index>(n);
  const auto mm = static_cast<Eigen::Index>(m);
  const WorldBounds& b = sc.bounds;

  if (!((b.min.array() < b.max.array()).all()))
    add("world: min must be below max in both coordinates");
  if (!(sc.dt() > 0.0) || !std::isfinite(sc.dt())) add("dt: must be positive and finite");
  if (!(sc.t_final >= 0.0) || !std::isfinite(sc.t_final))
    add("t_final: must be nonnegative and finite");
  if (n > 0 && m == 0) add("tasks: at least one task is required when robots are present");
  if (n > 0 && m > 0 && static_cast<double>(n) * std::log2(static_cast<double>(m)) > 24.0)
    add("robots/tasks: M^N exceeds the exhaustive assignment budget of 2^24");

  for (std::size_t i = 0; i < n; ++i) {
    const RobotSpec& r = sc.robots[i];
    if (r.id != i) add(index_path("robots", i) + ".id: must equal its position " + std::to_string(i));
    if (!r.position.allFinite() || !b.contains(r.position))
      add(index_path("robots", i) + ".position: outside world bounds");
  }
  for (std::size_t j = 0; j < m; ++j) {
    const TaskDef& t = sc.tasks[j];
    if (t.id != j) add(index_path("tasks", j) + ".id: must equal its position " + std::to_string(j));
    if (!t.goal.allFinite() || !b.contains(t.goal))
      add(index_path("tasks", j) + ".goal: outside world bounds");
  }

  const SpecializationState& sp = sc.spec_init;
  if (!(sp.s_max > 0.0) || !std::isfinite(sp.s_max)) add("s_max: must be positive and finite");
  if (!(sp.eps_s >= 0.0) || !(sp.eps_s < sp.s_max)) add("eps_s: must lie in [0, s_max)");
  auto check_matrix = [&](const Eigen::MatrixXd& mat, const char* name) {
    if (mat.rows() != nn || mat.cols() != mm) {
      add(std::string(name) + ": expected " + std::to_string(n) + "x" + std::to_string(m) +
          " matrix, got " + std::to_string(mat.rows()) + "x" + std::to_string(mat.cols()));
      return;
    }
    if (mat.size() > 0 && (!mat.allFinite() || mat.minCoeff() < 0.0 || mat.maxCoeff() > sp.s_max))
      add(std::string(name) + ": entries must lie in [0, s_max]");
  };
  check_matrix(sp.values, "spec_init");
  check_matrix(sc.adaptation.s_bar, "s_bar");

  const GlobalSpec& g = sc.global;
  if (g.pi_star.size() != mm) {
    add("global.pi_star: length " + std::to_string(g.pi_star.size()) + " differs from task count " +
        std::to_string(m));
  } else if (mm > 0) {
    if (!g.pi_star.allFinite() || g.pi_star.minCoeff() < 0.0 || g.pi_star.maxCoeff() > 1.0)
      add("global.pi_star: entries must lie in [0, 1]");
    if (g.pi_star.sum() > 1.0 + 1e-9) add("global.pi_star: entries must sum to at most 1");
  }
  if (g.task_weights.size() != mm)
    add("global.task_weights: length " + std::to_string(g.task_weights.size()) +
        " differs from task count " + std::to_string(m));
  else if (mm > 0 && (!g.task_weights.allFinite() || g.task_weights.minCoeff() < 0.0))
    add("global.task_weights: entries must be nonnegative");
  if (!(g.mismatch_weight >= 0.0) || !std::isfinite(g.mismatch_weight))
    add("global.C: must be nonnegative and finite");
  if (!(g.slack_weight > 0.0) || !std::isfinite(g.slack_weight))
    add("global.l: must be positive and finite");
  if (!(g.kappa > 1.0) || !std::isfinite(g.kappa)) add("global.kappa: must exceed 1");
  if (!(g.delta_max > 0.0) || !std::isfinite(g.delta_max))
    add("global.delta_max: must be positive and finite");
  if (!(g.u_max > 0.0) || !std::isfinite(g.u_max)) add("global.u_max: must be positive and finite");

  const AdaptationParams& a = sc.adaptation;
  if (!(a.beta1 > 0.0) || !std::isfinite(a.beta1)) add("adaptation.beta1: must be positive");
  if (!(a.beta2 >= 0.0) || !std::isfinite(a.beta2)) add("adaptation.beta2: must be nonnegative");
  if (a.mode == AdaptationMode::WithIntegral && !(a.beta2 > 0.0))
    add("adaptation.beta2: must be positive in integral mode");
  if (!(a.leak >= 0.0 && a.leak < 1.0)) add("adaptation.leak: must lie in [0, 1)");
  if (!(sc.gamma.gain > 0.0) || !std::isfinite(sc.gamma.gain))
    add("gamma.gain: must be positive and finite");
  if (!(sc.occupancy_eps >= 0.0)) add("diagnostics.occupancy_eps: must be nonnegative");
  if (!(sc.completion_threshold > 0.0))
    add("diagnostics.completion_threshold: must be positive");
  if (!(sc.qp.tol_primal > 0.0) || !(sc.qp.tol_dual > 0.0) || !(sc.qp.tol_obj > 0.0))
    add("qp: tolerances must be positive");
  if (sc.qp.max_iterations == 0) add("qp.max_iterations: must be positive");

  std::set<std::string> names;
  for (std::size_t k = 0; k < sc.regions.size(); ++k) {
    const DisturbanceRegion& r = sc.regions[k];
    const std::string p = index_path("regions", k);
    if (r.name.empty()) add(p + ".name: must be non-empty");
    else if (!names.insert(r.name).second) add(p + ".name: duplicate region name \"" + r.name + "\"");
    if (!(r.mu >= 0.0 && r.mu <= 1.0)) add(p + ".mu: must lie in [0, 1]");
    std::visit(
        [&](const auto& geo) {
          using T = std::decay_t<decltype(geo)>;
          if constexpr (std::is_same_v<T, Disk>) {
            if (!(geo.radius > 0.0)) add(p + ".radius: must be positive");
          } else if constexpr (std::is_same_v<T, Rect>) {
            if (!((geo.min.array() < geo.max.array()).all()))
              add(p + ": min must be below max in both coordinates");
          } else {
            if (!(geo.r_in >= 0.0)) add(p + ".r_in: must be nonnegative");
            if (!(geo.r_in < geo.r_out)) add(p + ": r_in must be smaller than r_out");
            if constexpr (std::is_same_v<T, AnnularSector>) {
              const double pi = std::numbers::pi;
              if (!(std::abs(geo.angle_from) <= pi) || !(std::abs(geo.angle_to) <= pi))
                add(p + ": angles must lie in [-pi, pi]");
            }
          }
        },
        r.geometry);
  }

  for (std::size_t k = 0; k < sc.schedule.size(); ++k) {
    const ScheduleEvent& ev = sc.schedule[k];
    const std::string p = index_path("schedule", k);
    if (!(ev.time >= 0.0 && ev.time <= sc.t_final)) add(p + ".time: must lie in [0, t_final]");
    if (const auto* sg = std::get_if<SetGoal>(&ev.action)) {
      if (std::stoull(ev.target) >= m) add(p + ".target: no task with index " + ev.target);
      if (!sg->goal.allFinite() || !b.contains(sg->goal)) add(p + ".value: goal outside world bounds");
    } else {
      if (names.count(ev.target) == 0) add(p + ".target: no region named \"" + ev.target + "\"");
      if (const auto* sm = std::get_if<SetMu>(&ev.action))
        if (!(sm->mu >= 0.0 && sm->mu <= 1.0)) add(p + ".value: mu must lie in [0, 1]");
    }
  }

  if (warnings) {
    for (const std::string& w : a.warnings()) warnings->push_back(w);
  }
}

Scenario parse_document(const json& doc, std::vector<std::string>& issues) {
  Reader rd(issues);
  rd.object(doc, "");
  rd.known_keys(doc, "", {"schema_version", "name", "world", "dt", "t_final", "robots", "tasks",
                          "regions", "schedule", "spec_init", "s_bar", "s_max", "eps_s", "global",
                          "adaptation", "gamma", "diagnostics", "qp"});
  Scenario sc;
  if (const json* v = rd.find(doc, "schema_version")) {
    if (rd.count(*v, "schema_version") != static_cast<std::size_t>(kSchemaVersion))
      issues.push_back("schema_version: only version 1 is supported");
  }
  if (const json* v = rd.find(doc, "name")) sc.name = rd.string(*v, "name");
  if (const json* w = rd.find(doc, "world")) {
    rd.object(*w, "world");
    rd.known_keys(*w, "world", {"min", "max"});
    if (const json* v = rd.find(*w, "min")) sc.bounds.min = rd.vec2(*v, "world.min");
    if (const json* v = rd.find(*w, "max")) sc.bounds.max = rd.vec2(*v, "world.max");
  }
  sc.adaptation.dt = rd.number_or(doc, "dt", "", 0.033);
  sc.t_final = rd.number_or(doc, "t_final", "", 30.0);

  if (const json* robots = rd.find(doc, "robots")) {
    rd.array(*robots, "robots");
    for (std::size_t i = 0; i < robots->size(); ++i) {
      const std::string p = index_path("robots", i);
      const json& r = rd.object((*robots)[i], p);
      rd.known_keys(r, p, {"id", "class", "position"});
      RobotSpec spec;
      spec.id = i;
      if (const json* v = rd.find(r, "id")) spec.id = rd.count(*v, join_path(p, "id"));
      if (const json* v = rd.find(r, "class")) {
        const std::string s = rd.string(*v, join_path(p, "class"));
        const auto c = parse_robot_class(s);
        if (c) spec.cls = *c;
        else issues.push_back(join_path(p, "class") + ": unknown robot class \"" + s + "\"");
      }
      const json* pos = rd.find(r, "position");
      if (!pos) throw ParseError(join_path(p, "position"), "missing field");
      spec.position = rd.vec2(*pos, join_path(p, "position"));
      sc.robots.push_back(spec);
    }
  }
  if (const json* tasks = rd.find(doc, "tasks")) {
    rd.array(*tasks, "tasks");
    for (std::size_t j = 0; j < tasks->size(); ++j) {
      const std::string p = index_path("tasks", j);
      const json& t = rd.object((*tasks)[j], p);
      rd.known_keys(t, p, {"id", "kind", "goal"});
      TaskDef task;
      task.id = j;
      if (const json* v = rd.find(t, "id")) task.id = rd.count(*v, join_path(p, "id"));
      if (const json* v = rd.find(t, "kind")) {
        const std::string k = rd.string(*v, join_path(p, "kind"));
        if (k != "go_to_goal") issues.push_back(join_path(p, "kind") + ": only go_to_goal is supported");
      }
      const json* goal = rd.find(t, "goal");
      if (!goal) throw ParseError(join_path(p, "goal"), "missing field");
      task.goal = rd.vec2(*goal, join_path(p, "goal"));
      sc.tasks.push_back(task);
    }
  }
  const auto n = static_cast<Eigen::Index>(sc.robots.size());
  const auto m = static_cast<Eigen::Index>(sc.tasks.size());

  if (const json* regions = rd.find(doc, "regions")) {
    rd.array(*regions, "regions");
    for (std::size_t k = 0; k < regions->size(); ++k)
      sc.regions.push_back(read_region(rd, (*regions)[k], index_path("regions", k), issues));
  }
  if (const json* schedule = rd.find(doc, "schedule")) {
    rd.array(*schedule, "schedule");
    for (std::size_t k = 0; k < schedule->size(); ++k)
      sc.schedule.push_back(read_event(rd, (*schedule)[k], index_path("schedule", k), issues));
  }

  sc.spec_init.s_max = rd.number_or(doc, "s_max", "", 1.0);
  sc.spec_init.eps_s = rd.number_or(doc, "eps_s", "", 1e-3);
  const json* si = rd.find(doc, "spec_init");
  sc.spec_init.values = si ? rd.matrix(*si, "spec_init")
                           : Eigen::MatrixXd(Eigen::MatrixXd::Constant(n, m, sc.spec_init.s_max));
  // An empty list is a valid 0 x M matrix when there are no robots.
  if (si && si->empty() && n == 0) sc.spec_init.values.resize(0, m);
  const json* sb = rd.find(doc, "s_bar");
  sc.adaptation.s_bar = sb ? rd.matrix(*sb, "s_bar") : sc.spec_init.values;
  if (sb && sb->empty() && n == 0) sc.adaptation.s_bar.resize(0, m);

  sc.global = GlobalSpec::defaults(static_cast<std::size_t>(m));
  if (const json* g = rd.find(doc, "global")) {
    rd.object(*g, "global");
    rd.known_keys(*g, "global", {"pi_star", "task_weights", "C", "l", "kappa", "delta_max", "u_max"});
    if (const json* v = rd.find(*g, "pi_star")) sc.global.pi_star = rd.vector(*v, "global.pi_star");
    if (const json* v = rd.find(*g, "task_weights"))
      sc.global.task_weights = rd.vector(*v, "global.task_weights");
    sc.global.mismatch_weight = rd.number_or(*g, "C", "global", sc.global.mismatch_weight);
    sc.global.slack_weight = rd.number_or(*g, "l", "global", sc.global.slack_weight);
    sc.global.kappa = rd.number_or(*g, "kappa", "global", sc.global.kappa);
    sc.global.delta_max = rd.number_or(*g, "delta_max", "global", sc.global.delta_max);
    sc.global.u_max = rd.number_or(*g, "u_max", "global", sc.global.u_max);
  }

  if (const json* a = rd.find(doc, "adaptation")) {
    rd.object(*a, "adaptation");
    rd.known_keys(*a, "adaptation", {"mode", "beta1", "beta2", "leak"});
    if (const json* v = rd.find(*a, "mode")) {
      const std::string mode = rd.string(*v, "adaptation.mode");
      if (mode == "proportional") sc.adaptation.mode = AdaptationMode::ProportionalOnly;
      else if (mode == "integral") sc.adaptation.mode = AdaptationMode::WithIntegral;
      else issues.push_back("adaptation.mode: expected proportional or integral");
    }
    sc.adaptation.beta1 = rd.number_or(*a, "beta1", "adaptation", sc.adaptation.beta1);
    sc.adaptation.beta2 = rd.number_or(*a, "beta2", "adaptation", sc.adaptation.beta2);
    sc.adaptation.leak = rd.number_or(*a, "leak", "adaptation", sc.adaptation.leak);
  }
  if (const json* g = rd.find(doc, "gamma")) {
    rd.object(*g, "gamma");
    rd.known_keys(*g, "gamma", {"form", "gain"});
    if (const json* v = rd.find(*g, "form")) {
      const std::string f = rd.string(*v, "gamma.form");
      if (f == "linear") sc.gamma.form = GammaForm::Linear;
      else if (f == "cubic") sc.gamma.form = GammaForm::Cubic;
      else issues.push_back("gamma.form: expected linear or cubic");
    }
    sc.gamma.gain = rd.number_or(*g, "gain", "gamma", sc.gamma.gain);
  }
  if (const json* d = rd.find(doc, "diagnostics")) {
    rd.object(*d, "diagnostics");
    rd.known_keys(*d, "diagnostics", {"occupancy_eps", "completion_threshold"});
    sc.occupancy_eps = rd.number_or(*d, "occupancy_eps", "diagnostics", sc.occupancy_eps);
    sc.completion_threshold =
        rd.number_or(*d, "completion_threshold", "diagnostics", sc.completion_threshold);
  }
  if (const json* q = rd.find(doc, "qp")) {
    rd.object(*q, "qp");
    rd.known_keys(*q, "qp", {"tol_primal", "tol_dual", "tol_obj", "max_iterations"});
    sc.qp.tol_primal = rd.number_or(*q, "tol_primal", "qp", sc.qp.tol_primal);
    sc.qp.tol_dual = rd.number_or(*q, "tol_dual", "qp", sc.qp.tol_dual);
    sc.qp.tol_obj = rd.number_or(*q, "tol_obj", "qp", sc.qp.tol_obj);
    if (const json* v = rd.find(*q, "max_iterations"))
      sc.qp.max_iterations = rd.count(*v, "qp.max_iterations");
  }
  return sc;
}

json scenario_json(const Scenario& sc) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["name"] = sc.name;
  doc["world"] = {{"min", vec2_json(sc.bounds.min)}, {"max", vec2_json(sc.bounds.max)}};
  doc["dt"] = sc.dt();
  doc["t_final"] = sc.t_final;
  json robots = json::array();
  for (const RobotSpec& r : sc.robots)
    robots.push_back({{"id", r.id}, {"class", to_string(r.cls)}, {"position", vec2_json(r.position)}});
  doc["robots"] = robots;
  json tasks = json::array();
  for (const TaskDef& t : sc.tasks)
    tasks.push_back({{"id", t.id}, {"kind", "go_to_goal"}, {"goal", vec2_json(t.goal)}});
  doc["tasks"] = tasks;
  json regions = json::array();
  for (const DisturbanceRegion& r : sc.regions) regions.push_back(region_json(r));
  doc["regions"] = regions;
  json schedule = json::array();
  for (const ScheduleEvent& e : sc.schedule) schedule.push_back(event_json(e));
  doc["schedule"] = schedule;
  doc["spec_init"] = matrix_json(sc.spec_init.values);
  doc["s_bar"] = matrix_json(sc.adaptation.s_bar);
  doc["s_max"] = sc.spec_init.s_max;
  doc["eps_s"] = sc.spec_init.eps_s;
  doc["global"] = {{"pi_star", vector_json(sc.global.pi_star)},
                   {"task_weights", vector_json(sc.global.task_weights)},
                   {"C", sc.global.mismatch_weight},
                   {"l", sc.global.slack_weight},
                   {"kappa", sc.global.kappa},
                   {"delta_max", sc.global.delta_max},
                   {"u_max", sc.global.u_max}};
  doc["adaptation"] = {
      {"mode", sc.adaptation.mode == AdaptationMode::WithIntegral ? "integral" : "proportional"},
      {"beta1", sc.adaptation.beta1},
      {"beta2", sc.adaptation.beta2},
      {"leak", sc.adaptation.leak}};
  doc["gamma"] = {{"form", to_string(sc.gamma.form)}, {"gain", sc.gamma.gain}};
  doc["diagnostics"] = {{"occupancy_eps", sc.occupancy_eps},
                        {"completion_threshold", sc.completion_threshold}};
  doc["qp"] = {{"tol_primal", sc.qp.tol_primal},
               {"tol_dual", sc.qp.tol_dual},
               {"tol_obj", sc.qp.tol_obj},
               {"max_iterations", sc.qp.max_iterations}};
  return doc;
}

Scenario load_from_json(const json& doc, std::vector<std::string>* warnings) {
  std::vector<std::string> issues;
  Scenario sc = parse_document(doc, issues);
  validate(sc, issues, warnings);
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return sc;
}

json record_json(const TraceRecord& r) {
  json j;
  j["k"] = r.step;
  j["t"] = r.time;
  j["x_act"] = matrix_json(r.x_act);
  j["x_sim"] = matrix_json(r.x_sim);
  j["u"] = matrix_json(r.u);
  j["task"] = r.task_of;
  j["delta"] = matrix_json(r.slacks);
  j["s"] = matrix_json(r.spec);
  j["V"] = matrix_json(r.costs);
  j["dV"] = matrix_json(r.delta_v);
  j["pi_h"] = vector_json(r.pi_h);
  j["objective"] = r.objective_total;
  j["mismatch"] = r.objective_mismatch;
  j["reassigned"] = r.reassigned;
  j["qp_iterations"] = r.qp_iterations;
  return j;
}

// Matrices with zero rows serialize as [] and must come back with the right width.
Eigen::MatrixXd read_matrix(const Reader& rd, const json& j, const std::string& path,
                            Eigen::Index cols) {
  Eigen::MatrixXd m = rd.matrix(j, path);
  if (m.rows() == 0) m.resize(0, cols);
  return m;
}

TraceRecord read_record(const json& j, std::size_t line, Eigen::Index m) {
  std::vector<std::string> ignored;
  Reader rd(ignored);
  const std::string p = "line " + std::to_string(line);
  auto at = [&](const char* key) -> const json& {
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError(join_path(p, key), "missing field");
    return *it;
  };
  rd.object(j, p);
  TraceRecord r;
  r.step = at("k").get<std::uint64_t>();
  r.time = rd.number(at("t"), join_path(p, "t"));
  r.x_act = read_matrix(rd, at("x_act"), join_path(p, "x_act"), 2);
  r.x_sim = read_matrix(rd, at("x_sim"), join_path(p, "x_sim"), 2);
  r.u = read_matrix(rd, at("u"), join_path(p, "u"), 2);
  r.task_of = at("task").get<std::vector<std::size_t>>();
  r.slacks = read_matrix(rd, at("delta"), join_path(p, "delta"), m);
  r.spec = read_matrix(rd, at("s"), join_path(p, "s"), m);
  r.costs = read_matrix(rd, at("V"), join_path(p, "V"), m);
  r.delta_v = read_matrix(rd, at("dV"), join_path(p, "dV"), m);
  r.pi_h = rd.vector(at("pi_h"), join_path(p, "pi_h"));
  r.objective_total = rd.number(at("objective"), join_path(p, "objective"));
  r.objective_mismatch = rd.number(at("mismatch"), join_path(p, "mismatch"));
  r.reassigned = rd.boolean(at("reassigned"), join_path(p, "reassigned"));
  r.qp_iterations = at("qp_iterations").get<std::int64_t>();
  return r;
}

void check_record_shape(const TraceRecord& r, std::size_t n, std::size_t line_no) {
  const auto rows = static_cast<Eigen::Index>(n);
  const Eigen::Index m = r.spec.cols();
  const bool ok = r.x_act.rows() == rows && r.x_sim.rows() == rows && r.u.rows() == rows &&
                  r.slacks.rows() == rows && r.spec.rows() == rows && r.costs.rows() == rows &&
                  r.delta_v.rows() == rows && r.task_of.size() == n && r.pi_h.size() == m &&
                  std::all_of(r.task_of.begin(), r.task_of.end(),
                              [&](std::size_t t) { return static_cast<Eigen::Index>(t) < m; });
  if (!ok)
    throw TraceFormatError("trace line " + std::to_string(line_no) +
                           ": record shape does not match the header scenario");
}

}  // namespace

Scenario load_scenario(std::string_view text, std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t col = 0;
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1, &col);
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col),
                     "malformed JSON");
  }
  return load_from_json(doc, warnings);
}

Scenario load_scenario_file(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return load_scenario(ss.str(), warnings);
  } catch (const ParseError& e) {
    throw ParseError(e.path().empty() ? path.string() : path.string() + ": " + e.path(),
                     e.message());
  }
}

std::string dump_scenario(const Scenario& scenario) { return scenario_json(scenario).dump(2); }

void write_trace(std::ostream& out, const Scenario& scenario,
                 std::span<const TraceRecord> records) {
  json header;
  header["schema_version"] = kSchemaVersion;
  header["scenario"] = scenario_json(scenario);
  out << header.dump() << '\n';
  for (const TraceRecord& r : records) out << record_json(r).dump() << '\n';
  if (!out) throw Error("write_trace: output stream failure");
}

TraceFile read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TraceFormatError("trace: missing header line");
  TraceFile file;
  try {
    const json header = json::parse(line);
    if (!header.is_object() || !header.contains("schema_version"))
      throw TraceFormatError("trace: header lacks schema_version");
    if (!header["schema_version"].is_number_integer() ||
        header["schema_version"].get<int>() != kSchemaVersion)
      throw TraceFormatError("trace: unsupported schema_version " + header["schema_version"].dump() +
                             " (expected " + std::to_string(kSchemaVersion) + ")");
    if (!header.contains("scenario")) throw TraceFormatError("trace: header lacks scenario");
    file.scenario = load_from_json(header["scenario"], nullptr);
  } catch (const json::exception& e) {
    throw TraceFormatError(std::string("trace: malformed header: ") + e.what());
  } catch (const ParseError& e) {
    throw TraceFormatError(std::string("trace: header scenario: ") + e.what());
  } catch (const ValidationError& e) {
    throw TraceFormatError(std::string("trace: header scenario: ") + e.what());
  }
  const auto m = static_cast<Eigen::Index>(file.scenario.num_tasks());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      TraceRecord rec = read_record(json::parse(line), line_no, m);
      check_record_shape(rec, file.scenario.num_robots(), line_no);
      if (!file.records.empty() && rec.step <= file.records.back().step)
        throw TraceFormatError("trace line " + std::to_string(line_no) +
                               ": step index is not increasing");
      file.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw TraceFormatError("trace line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw TraceFormatError(std::string("trace: ") + e.what());
    }
  }
  if (in.bad()) throw TraceFormatError("trace: read failure");
  return file;
}

TraceFile read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceFormatError(path.string() + ": cannot open file");
  return read_trace(in);
}

}  // namespace ata

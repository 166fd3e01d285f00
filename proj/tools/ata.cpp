// Command-line driver: run, validate, summarize, plot-data, selftest.
//
// Exit codes: 0 success, 1 error, 2 run finished with incomplete tasks.

#include "ata/errors.hpp"
#include "ata/scenario_io.hpp"
#include "ata/simworld.hpp"
#include "ata/testing/oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitIncomplete = 2;

void print_summary(std::ostream& os, const ata::Summary& s) {
  os << "steps: " << s.num_steps << '\n';
  os << "tasks completed: " << s.tasks_completed << '/' << s.completion.size() << '\n';
  for (std::size_t m = 0; m < s.completion.size(); ++m) {
    const auto& c = s.completion[m];
    os << "  task " << m << ": ";
    if (c.step)
      os << "step " << *c.step << ", t = " << *c.time << " s, robot " << *c.robot << '\n';
    else
      os << "not completed\n";
  }
  os << "reassignments: " << s.reassignments << '\n';
  os << "disturbance occupancy: ";
  if (s.occupancy) os << *s.occupancy << '\n';
  else os << "n/a\n";
  os << "final specialization:\n";
  for (Eigen::Index i = 0; i < s.final_spec.rows(); ++i) {
    os << "  robot " << i << ":";
    for (Eigen::Index j = 0; j < s.final_spec.cols(); ++j)
      os << ' ' << std::setprecision(6) << s.final_spec(i, j);
    os << '\n';
  }
}

int cmd_run(const std::string& scenario_path, const std::string& out_path,
            std::optional<double> until) {
  std::vector<std::string> warnings;
  const ata::Scenario sc = ata::load_scenario_file(scenario_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  const auto t0 = std::chrono::steady_clock::now();
  const ata::Trace trace = ata::run_scenario(sc, ata::RunOptions{until});
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ata::Error("cannot open " + out_path + " for writing");
  ata::write_trace(out, sc, trace);
  out.close();
  if (!out) throw ata::Error("failed writing " + out_path);

  std::size_t completed = 0;
  std::size_t reassignments = 0;
  if (!trace.empty()) {
    const ata::Summary s = ata::summarize(trace, ata::summary_options(sc));
    completed = s.tasks_completed;
    reassignments = s.reassignments;
  }
  char wall_text[32];
  std::snprintf(wall_text, sizeof wall_text, "%.2f", wall);
  std::cout << completed << '/' << sc.num_tasks() << " tasks completed, " << reassignments
            << " reassignments, " << trace.size() << " steps, wall time " << wall_text << " s\n";
  return completed == sc.num_tasks() ? kExitOk : kExitIncomplete;
}

int cmd_validate(const std::string& scenario_path) {
  std::vector<std::string> warnings;
  const ata::Scenario sc = ata::load_scenario_file(scenario_path, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "ok: " << sc.num_robots() << " robots, " << sc.num_tasks() << " tasks, "
            << sc.regions.size() << " regions, " << sc.schedule.size() << " events, "
            << sc.num_steps() << " steps\n";
  return kExitOk;
}

int cmd_summarize(const std::string& trace_path, std::optional<double> from,
                  std::optional<double> to) {
  const ata::TraceFile tf = ata::read_trace_file(trace_path);
  if (tf.records.empty()) {
    std::cout << "steps: 0\n";
    return kExitOk;
  }
  ata::SummaryOptions opt = ata::summary_options(tf.scenario);
  if (from) opt.first_step = ata::event_step(*from, opt.dt);
  if (to) opt.last_step = ata::event_step(*to, opt.dt);
  print_summary(std::cout, ata::summarize(tf.records, opt));
  return kExitOk;
}

int cmd_plot_data(const std::string& trace_path, const std::string& what,
                  const std::string& out_path) {
  const ata::TraceFile tf = ata::read_trace_file(trace_path);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw ata::Error("cannot open " + out_path + " for writing");
  out << std::setprecision(17);
  if (what == "traj") {
    out << "k,t,robot,x,y\n";
    for (const auto& r : tf.records)
      for (Eigen::Index i = 0; i < r.x_act.rows(); ++i)
        out << r.step << ',' << r.time << ',' << i << ',' << r.x_act(i, 0) << ',' << r.x_act(i, 1)
            << '\n';
  } else if (what == "spec" || what == "cost") {
    out << "k,t,robot,task," << (what == "spec" ? "s" : "V") << '\n';
    for (const auto& r : tf.records) {
      const Eigen::MatrixXd& m = what == "spec" ? r.spec : r.costs;
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
          out << r.step << ',' << r.time << ',' << i << ',' << j << ',' << m(i, j) << '\n';
    }
  } else {
    out << "k,t,task,pi_h\n";
    for (const auto& r : tf.records)
      for (Eigen::Index j = 0; j < r.pi_h.size(); ++j)
        out << r.step << ',' << r.time << ',' << j << ',' << r.pi_h[j] << '\n';
  }
  out.close();
  if (!out) throw ata::Error("failed writing " + out_path);
  return kExitOk;
}

int cmd_selftest(const std::string& oracle) {
  ata::testing::SuiteReport rep;
  if (oracle == "qp") rep = ata::testing::run_qp_oracle_suite();
  else if (oracle == "miqp") rep = ata::testing::run_miqp_oracle_suite();
  else rep = ata::testing::run_adaptation_oracle_suite();
  for (const auto& f : rep.failures) std::cerr << "FAIL " << f << '\n';
  std::cout << oracle << " oracle: " << rep.passed << " passed, " << rep.failed << " failed\n";
  return rep.ok() ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive task allocation engine and simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, trace_path, what, oracle;
  std::optional<double> until, from, to;

  auto* run = app.add_subcommand("run", "Simulate a scenario and write its trace");
  run->add_option("--scenario", scenario_path, "Scenario document (JSON)")->required();
  run->add_option("--out", out_path, "Trace output (NDJSON)")->required();
  run->add_option("--until", until, "Stop at this simulated time (s)");

  auto* validate = app.add_subcommand("validate", "Check a scenario without running it");
  validate->add_option("--scenario", scenario_path, "Scenario document (JSON)")->required();

  auto* summarize = app.add_subcommand("summarize", "Print metrics for a trace");
  summarize->add_option("--trace", trace_path, "Trace file")->required();
  summarize->add_option("--from", from, "Window start time (s)");
  summarize->add_option("--to", to, "Window end time (s, exclusive)");

  auto* plot = app.add_subcommand("plot-data", "Export trace columns as CSV");
  plot->add_option("--trace", trace_path, "Trace file")->required();
  plot->add_option("--what", what, "traj, spec, cost or pih")
      ->required()
      ->check(CLI::IsMember({"traj", "spec", "cost", "pih"}));
  plot->add_option("--out", out_path, "CSV output")->required();

  auto* self = app.add_subcommand("selftest", "Run an oracle cross-check suite");
  self->add_option("--oracle", oracle, "qp, miqp or adaptation")
      ->required()
      ->check(CLI::IsMember({"qp", "miqp", "adaptation"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*run) return cmd_run(scenario_path, out_path, until);
    if (*validate) return cmd_validate(scenario_path);
    if (*summarize) return cmd_summarize(trace_path, from, to);
    if (*plot) return cmd_plot_data(trace_path, what, out_path);
    if (*self) return cmd_selftest(oracle);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

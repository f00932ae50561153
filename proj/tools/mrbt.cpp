// mrbt: run, analyze and inspect multi-robot behavior-tree missions.
//
// Exit codes: 0 success, 1 mission failure or infeasible problem,
// 2 configuration or validation error, 3 tick limit reached.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mrbt/mrbt.hpp"

namespace {

enum class Level { Quiet, Warn, Info, Debug };

Level log_level() {
  const char* env = std::getenv("MRBT_LOG");
  if (!env) return Level::Warn;
  std::string v = env;
  if (v == "quiet" || v == "0") return Level::Quiet;
  if (v == "info" || v == "2") return Level::Info;
  if (v == "debug" || v == "3") return Level::Debug;
  return Level::Warn;
}

void log(Level at, const std::string& msg) {
  static const Level level = log_level();
  if (at <= level && level != Level::Quiet) std::cerr << msg << '\n';
}

void print_warnings(const mrbt::ValidationReport& report) {
  for (const auto& w : report.warnings) log(Level::Warn, "warning: " + w);
}

int cmd_validate(const std::string& path) {
  auto s = mrbt::load_scenario(path);
  auto report = mrbt::validate_assumptions(s);
  print_warnings(report);
  for (const auto& v : report.violations) {
    std::cout << path;
    if (v.line) std::cout << ':' << v.line;
    std::cout << ": " << to_string(v.kind) << ": " << v.message << '\n';
  }
  if (!report.ok()) return 2;
  std::cout << path << ": ok (" << s.robots.size() << " robots, " << s.local_tasks.size() << " local tasks, "
            << s.global_tasks.size() << " global tasks)\n";
  return 0;
}

struct RunArgs {
  std::string scenario;
  std::string faults;
  std::string trace;
  std::uint64_t seed = 0;
  std::uint64_t ticks = 0;
};

int cmd_run(const RunArgs& a) {
  auto s = mrbt::load_scenario(a.scenario);
  auto report = mrbt::validate_assumptions(s);
  print_warnings(report);
  for (const auto& v : report.violations)
    if (v.kind == mrbt::Violation::Kind::Concurrency) log(Level::Warn, "warning: " + v.message);
  std::vector<mrbt::ScheduledFault> faults;
  if (!a.faults.empty()) faults = mrbt::load_faults(a.faults, s);
  mrbt::SimOptions opts;
  opts.seed = a.seed;
  if (a.ticks) opts.tick_limit = a.ticks;

  mrbt::Simulator sim(s, faults, opts);
  auto result = sim.run();
  if (!a.trace.empty()) {
    if (a.trace == "-") {
      mrbt::write_jsonl(std::cout, result.trace, s);
    } else {
      std::ofstream out(a.trace, std::ios::binary);
      if (!out) throw mrbt::ConfigError("cannot write '" + a.trace + "'");
      mrbt::write_jsonl(out, result.trace, s);
    }
  }
  if (result.disagreements) log(Level::Warn, "warning: replicas disagreed on " + std::to_string(result.disagreements) + " ticks");
  log(Level::Info, std::to_string(result.trace.size()) + " events");

  std::ostream& os = a.trace == "-" ? std::cerr : std::cout;
  if (result.limit_reached) {
    os << "tick limit " << result.ticks << " reached, mission still running\n";
    return 3;
  }
  os << "mission " << (result.status == mrbt::Status::Success ? "succeeded" : "failed") << " at tick "
     << result.ticks << '\n';
  return result.status == mrbt::Status::Success ? 0 : 1;
}

int cmd_solve(const std::string& path, bool json) {
  auto pf = mrbt::load_problem(path);
  auto sol = mrbt::solve(pf.problem, pf.exclusions);
  if (json) {
    nlohmann::ordered_json j;
    j["feasible"] = sol.has_value();
    if (sol) {
      j["objective"] = sol->objective;
      nlohmann::ordered_json a = nlohmann::ordered_json::object();
      for (std::size_t i = 0; i < pf.robots.size(); ++i)
        a[pf.robots[i]] = sol->choice[i] ? nlohmann::ordered_json(pf.tasks[*sol->choice[i]]) : nullptr;
      j["assignment"] = a;
    }
    std::cout << j.dump(2) << '\n';
  } else if (!sol) {
    std::cout << "infeasible\n";
  } else {
    for (std::size_t i = 0; i < pf.robots.size(); ++i)
      std::cout << pf.robots[i] << " -> " << (sol->choice[i] ? pf.tasks[*sol->choice[i]] : "idle") << '\n';
    std::cout << "objective " << sol->objective << '\n';
  }
  return sol ? 0 : 1;
}

int cmd_analyze(const std::string& path, bool json) {
  auto s = mrbt::load_scenario(path);
  auto report = mrbt::validate_assumptions(s);
  print_warnings(report);
  auto blocking = report.blocking();
  if (!blocking.empty()) {
    for (const auto& v : blocking) std::cerr << path << ": " << v.message << '\n';
    return 2;
  }
  auto r = mrbt::analyze(s);
  if (json)
    std::cout << mrbt::report_json(r, s).dump(2) << '\n';
  else
    std::cout << mrbt::format_report(r, s);
  return 0;
}

int cmd_translate(const std::string& tree_path, const std::string& scenario_path, bool sequential,
                  const std::string& out_path) {
  auto s = mrbt::load_scenario(scenario_path);
  auto single = mrbt::load_tree(tree_path);
  auto tr = mrbt::translate(single, s, !sequential);
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw mrbt::ConfigError("cannot write '" + out_path + "'");
  }
  std::ostream& os = out_path.empty() ? std::cout : file;
  for (const auto& g : tr.global_tasks) {
    os << "global " << g.id;
    for (const auto& d : g.demands)
      os << " needs " << s.local_tasks[d.local].id << ' ' << d.min_robots << ' ' << d.max_robots;
    if (!g.effect.empty()) {
      os << " effect";
      for (const auto& e : g.effect) os << ' ' << e;
    }
    os << '\n';
  }
  os << "tree " << mrbt::format_tree(tr.mission);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot behavior-tree missions: simulate, solve assignments, analyze fault tolerance"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Simulate a mission");
  run->add_option("scenario", run_args.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--faults", run_args.faults, "Fault schedule file")->check(CLI::ExistingFile);
  run->add_option("--seed", run_args.seed, "Seed for randomly broken parts");
  run->add_option("--ticks", run_args.ticks, "Tick limit (default: 10 x global tasks x longest duration)");
  run->add_option("--trace", run_args.trace, "Write the JSONL trace here ('-' for stdout)");

  std::string problem;
  bool solve_json = false;
  auto* solve = app.add_subcommand("solve", "Solve a standalone assignment problem");
  solve->add_option("problem", problem, "Problem file")->required()->check(CLI::ExistingFile);
  solve->add_flag("--json", solve_json, "JSON output");

  std::string analyze_path;
  bool analyze_json = false;
  auto* analyze = app.add_subcommand("analyze", "Fault-tolerance report");
  analyze->add_option("scenario", analyze_path, "Scenario file")->required()->check(CLI::ExistingFile);
  analyze->add_flag("--json", analyze_json, "JSON output");

  std::string tree_path, tr_scenario, tr_out;
  bool sequential = false;
  auto* translate = app.add_subcommand("translate", "Turn an annotated single-robot tree into a fleet mission");
  translate->add_option("tree", tree_path, "Single-robot tree file")->required()->check(CLI::ExistingFile);
  translate->add_option("--scenario", tr_scenario, "Scenario declaring the fleet")->required()->check(CLI::ExistingFile);
  translate->add_flag("--sequential", sequential, "Ignore parallelizable annotations");
  translate->add_option("-o,--out", tr_out, "Output file");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check robot-count and coverage assumptions");
  validate->add_option("scenario", validate_path, "Scenario file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*solve) return cmd_solve(problem, solve_json);
    if (*analyze) return cmd_analyze(analyze_path, analyze_json);
    if (*translate) return cmd_translate(tree_path, tr_scenario, sequential, tr_out);
    if (*validate) return cmd_validate(validate_path);
  } catch (const mrbt::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mrbt::ContractViolation& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

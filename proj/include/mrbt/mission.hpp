#pragma once

/// @file mission.hpp
/// @brief Mission vocabulary: robots, capability sets, local and global
/// tasks with their demand bounds, the performance table, and the load-time
/// checks on robot counts and task coverage.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mrbt/bt.hpp"
#include "mrbt/error.hpp"

namespace mrbt {

/// Performance of a robot on a task it cannot perform.
inline constexpr double kIncapable = -std::numeric_limits<double>::infinity();

/// Leaf id of a global-task node inside a mission tree.
inline constexpr std::string_view kPerformGlobalTask = "PerformGlobalTask";

inline bool is_global_task_leaf(const Node& n) {
  return n.kind == NodeKind::Action && n.name == kPerformGlobalTask;
}

inline Node global_task_node(std::string id) {
  return action(std::string(kPerformGlobalTask), {std::move(id)});
}

struct LocalTask {
  std::string id;
  std::string display;
  /// Base cost K: a robot with performance p needs ceil(K / p) ticks.
  double base_cost = 3.0;
};

struct FaultState {
  bool major = false;
  std::set<std::size_t> lost;  // local-task indices lost to minor faults

  bool covers(std::size_t task) const { return major || lost.count(task) > 0; }
  bool healthy() const { return !major && lost.empty(); }
};

struct Robot {
  std::string name;
  std::string type;
  /// Load-time performance per local task; kIncapable outside the capability set.
  std::vector<double> performance;
  FaultState fault;

  bool has_capability(std::size_t task) const {
    return task < performance.size() && performance[task] > kIncapable;
  }
  bool capable(std::size_t task) const { return has_capability(task) && !fault.covers(task); }

  /// The capability set as loaded (faults do not shrink it).
  std::vector<std::size_t> capabilities() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < performance.size(); ++j)
      if (has_capability(j)) out.push_back(j);
    return out;
  }
};

/// Bounds of one (global task, local task) pair.
struct Demand {
  std::size_t local = 0;
  unsigned min_robots = 0;  // nu
  unsigned max_robots = 0;  // mu
};

struct GlobalTask {
  std::string id;
  std::vector<Demand> demands;  // psi(g) with its bounds, in declaration order
  /// World effect tokens, e.g. {"diagnose", "3"}; interpreted by the world model.
  std::vector<std::string> effect;
  std::size_t line = 0;

  unsigned total_min() const {
    unsigned sum = 0;
    for (const auto& d : demands) sum += d.min_robots;
    return sum;
  }
  const Demand* demand_for(std::size_t local) const {
    for (const auto& d : demands)
      if (d.local == local) return &d;
    return nullptr;
  }
};

/// p(i, l_j) for every robot and local task.
class PerformanceTable {
 public:
  PerformanceTable() = default;
  PerformanceTable(std::size_t robots, std::size_t tasks, double fill = kIncapable)
      : robots_(robots), tasks_(tasks), values_(robots * tasks, fill) {}

  std::size_t robots() const noexcept { return robots_; }
  std::size_t tasks() const noexcept { return tasks_; }

  double operator()(std::size_t robot, std::size_t task) const {
    return values_[index(robot, task)];
  }
  double& at(std::size_t robot, std::size_t task) { return values_[index(robot, task)]; }
  bool capable(std::size_t robot, std::size_t task) const {
    return (*this)(robot, task) > kIncapable;
  }
  void disable_robot(std::size_t robot) {
    for (std::size_t j = 0; j < tasks_; ++j) at(robot, j) = kIncapable;
  }

  friend bool operator==(const PerformanceTable&, const PerformanceTable&) = default;

 private:
  std::size_t index(std::size_t robot, std::size_t task) const {
    if (robot >= robots_ || task >= tasks_)
      throw ConfigError("performance table index (" + std::to_string(robot) + ", " +
                        std::to_string(task) + ") out of range");
    return robot * tasks_ + task;
  }

  std::size_t robots_ = 0;
  std::size_t tasks_ = 0;
  std::vector<double> values_;
};

/// Initial physical state for the simulator.
struct WorldSetup {
  std::size_t parts = 0;
  std::vector<std::size_t> broken;  // 1-based part numbers
  bool random_parts = false;
  bool nominal = true;
  std::set<std::string> facts;
};

struct Scenario {
  std::string name;
  std::string source;  // file the scenario was read from, for diagnostics
  std::vector<LocalTask> local_tasks;
  std::vector<Robot> robots;
  std::vector<GlobalTask> global_tasks;
  /// The global mission tree; its action leaves are global-task nodes.
  Node mission = condition("true");
  WorldSetup world;

  std::optional<std::size_t> local_index(std::string_view id) const {
    for (std::size_t j = 0; j < local_tasks.size(); ++j)
      if (local_tasks[j].id == id) return j;
    return std::nullopt;
  }
  std::optional<std::size_t> global_index(std::string_view id) const {
    for (std::size_t k = 0; k < global_tasks.size(); ++k)
      if (global_tasks[k].id == id) return k;
    return std::nullopt;
  }
  /// Accepts a robot name or a 1-based index.
  std::optional<std::size_t> robot_index(std::string_view key) const {
    for (std::size_t i = 0; i < robots.size(); ++i)
      if (robots[i].name == key) return i;
    if (!key.empty() && std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      std::size_t v = std::stoul(std::string(key));
      if (v >= 1 && v <= robots.size()) return v - 1;
    }
    return std::nullopt;
  }

  std::size_t require_local(std::string_view id) const {
    if (auto j = local_index(id)) return *j;
    throw ConfigError("unknown local task '" + std::string(id) + "'");
  }
  std::size_t require_global(std::string_view id) const {
    if (auto k = global_index(id)) return *k;
    throw ConfigError("unknown global task '" + std::string(id) + "'");
  }
  std::size_t require_robot(std::string_view key) const {
    if (auto i = robot_index(key)) return *i;
    throw ConfigError("unknown robot '" + std::string(key) + "'");
  }

  /// p under the current fault states.
  PerformanceTable performance() const {
    PerformanceTable table(robots.size(), local_tasks.size());
    for (std::size_t i = 0; i < robots.size(); ++i)
      for (std::size_t j = 0; j < local_tasks.size(); ++j)
        if (robots[i].capable(j)) table.at(i, j) = robots[i].performance[j];
    return table;
  }

  /// The union of the loaded capability sets.
  std::set<std::size_t> all_local_tasks() const {
    std::set<std::size_t> out;
    for (const auto& r : robots)
      for (auto j : r.capabilities()) out.insert(j);
    return out;
  }
};

/// Global-task ids referenced by the leaves of `tree`, in pre-order.
inline std::vector<std::string> referenced_global_tasks(const Node& tree) {
  std::vector<std::string> out;
  for_each_node(tree, [&](const Node& n) {
    if (is_global_task_leaf(n)) out.push_back(n.arg());
  });
  return out;
}

/// Robots able to perform `task` under current fault states.
inline std::vector<std::size_t> capable_robots(std::size_t task, const Scenario& scenario) {
  if (task >= scenario.local_tasks.size())
    throw ConfigError("local task index " + std::to_string(task) + " out of range");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scenario.robots.size(); ++i)
    if (scenario.robots[i].capable(task)) out.push_back(i);
  return out;
}

inline std::vector<std::size_t> capable_robots(std::string_view task, const Scenario& scenario) {
  return capable_robots(scenario.require_local(task), scenario);
}

// Co-activation --------------------------------------------------------------

/// Largest sum of nu over global tasks that can be active at the same time
/// inside `n`: parallel children add up, sequence/selector children take turns.
inline unsigned peak_demand(const Node& n, const Scenario& scenario) {
  switch (n.kind) {
    case NodeKind::Action:
      if (is_global_task_leaf(n)) {
        if (auto k = scenario.global_index(n.arg())) return scenario.global_tasks[*k].total_min();
      }
      return 0;
    case NodeKind::Condition:
      return 0;
    case NodeKind::Parallel: {
      unsigned sum = 0;
      for (const auto& c : n.children) sum += peak_demand(c, scenario);
      return sum;
    }
    case NodeKind::Root:
    case NodeKind::Selector:
    case NodeKind::Sequence: {
      unsigned best = 0;
      for (const auto& c : n.children) best = std::max(best, peak_demand(c, scenario));
      return best;
    }
  }
  return 0;
}

/// P_h for every global task: the tasks whose nearest common ancestor with
/// it in the mission tree is a parallel node. Keyed by global-task id.
inline std::map<std::string, std::set<std::string>> coactivation_sets(const Node& tree) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& id : referenced_global_tasks(tree)) out[id];
  for_each_node(tree, [&](const Node& n) {
    if (n.kind != NodeKind::Parallel) return;
    std::vector<std::vector<std::string>> groups;
    for (const auto& c : n.children) groups.push_back(referenced_global_tasks(c));
    for (std::size_t a = 0; a < groups.size(); ++a)
      for (std::size_t b = 0; b < groups.size(); ++b)
        if (a != b)
          for (const auto& x : groups[a])
            for (const auto& y : groups[b]) out[x].insert(y);
  });
  return out;
}

// Validation -----------------------------------------------------------------

struct Violation {
  enum class Kind { Structure, Reference, Bounds, TooFewRobots, Concurrency, UncoveredTask };
  Kind kind;
  std::string message;
  std::size_t line = 0;
};

constexpr std::string_view to_string(Violation::Kind k) noexcept {
  switch (k) {
    case Violation::Kind::Structure: return "structure";
    case Violation::Kind::Reference: return "reference";
    case Violation::Kind::Bounds: return "bounds";
    case Violation::Kind::TooFewRobots: return "too-few-robots";
    case Violation::Kind::Concurrency: return "concurrency";
    case Violation::Kind::UncoveredTask: return "uncovered-task";
  }
  return "?";
}

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  bool ok() const noexcept { return violations.empty(); }

  /// Violations that make the mission impossible to run at all. Parallel
  /// co-activation beyond the fleet size only serializes the branches.
  std::vector<Violation> blocking() const {
    std::vector<Violation> out;
    for (const auto& v : violations)
      if (v.kind != Violation::Kind::Concurrency) out.push_back(v);
    return out;
  }
};

/// Checks the robot-count assumption on every parallel node (and every
/// global task alone) and that every demanded local task is in some
/// robot's capability set. Reports all violations.
inline ValidationReport validate_assumptions(const Scenario& s) {
  ValidationReport report;
  const std::size_t n = s.robots.size();
  auto add = [&](Violation::Kind kind, std::string msg, std::size_t line) {
    report.violations.push_back({kind, std::move(msg), line});
  };

  for (const auto& e : structure_errors(s.mission)) add(Violation::Kind::Structure, e, 0);

  if (s.robots.empty()) report.warnings.push_back("scenario has no robots");
  for (const auto& r : s.robots) {
    if (r.capabilities().empty())
      add(Violation::Kind::UncoveredTask, "robot '" + r.name + "' has an empty capability set", 0);
    for (std::size_t j = 0; j < r.performance.size(); ++j)
      if (r.performance[j] == 0.0)
        report.warnings.push_back("robot '" + r.name + "' has performance 0 on '" +
                                  s.local_tasks[j].id + "' and can never finish it");
  }

  std::set<std::string> seen;
  for_each_node(s.mission, [&](const Node& node) {
    if (!is_global_task_leaf(node)) return;
    if (!s.global_index(node.arg()))
      add(Violation::Kind::Reference, "mission tree references unknown global task '" + node.arg() + "'",
          node.line);
    else if (!seen.insert(node.arg()).second)
      add(Violation::Kind::Reference, "global task '" + node.arg() + "' appears more than once in the mission tree",
          node.line);
  });

  const auto covered = s.all_local_tasks();
  for (const auto& g : s.global_tasks) {
    if (g.demands.empty())
      add(Violation::Kind::Bounds, "global task '" + g.id + "' demands no local task", g.line);
    for (const auto& d : g.demands) {
      const std::string pair = "(" + g.id + ", " + s.local_tasks.at(d.local).id + ")";
      if (d.min_robots > d.max_robots)
        add(Violation::Kind::Bounds,
            "nu > mu for " + pair + ": " + std::to_string(d.min_robots) + " > " + std::to_string(d.max_robots),
            g.line);
      if (d.min_robots == 0)
        report.warnings.push_back("nu = 0 for " + pair + "; the local task is optional");
      if (!covered.count(d.local))
        add(Violation::Kind::UncoveredTask,
            "global task '" + g.id + "' needs '" + s.local_tasks[d.local].id + "' which no robot can perform",
            g.line);
    }
    if (g.total_min() > n)
      add(Violation::Kind::TooFewRobots,
          "global task '" + g.id + "' alone needs " + std::to_string(g.total_min()) + " robots, fleet has " +
              std::to_string(n),
          g.line);
    if (!seen.count(g.id)) report.warnings.push_back("global task '" + g.id + "' is not used by the mission tree");
  }

  for_each_node(s.mission, [&](const Node& node) {
    if (node.kind != NodeKind::Parallel) return;
    unsigned peak = peak_demand(node, s);
    if (peak > n) {
      std::string msg = "parallel node";
      if (node.line) msg += " at line " + std::to_string(node.line);
      msg += " co-activates global tasks needing " + std::to_string(peak) + " robots, fleet has " +
             std::to_string(n);
      add(Violation::Kind::Concurrency, msg, node.line);
    }
  });
  return report;
}

}  // namespace mrbt

#pragma once

/// @file tree_factory.hpp
/// @brief Builds the per-robot tree Parallel(T_A, T_G, T_L, 3) and
/// translates annotated single-robot trees into global mission trees.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mrbt/bt.hpp"
#include "mrbt/error.hpp"
#include "mrbt/mission.hpp"

namespace mrbt {

namespace leaf {
inline constexpr std::string_view kLocalTaskFinished = "LocalTaskFinished";
inline constexpr std::string_view kNewGlobalTaskExecuted = "NewGlobalTaskExecuted";
inline constexpr std::string_view kCheckConsistency = "CheckConsistency";
inline constexpr std::string_view kAssignAgents = "AssignAgents";
inline constexpr std::string_view kAssignedTo = "AssignedTo";
inline constexpr std::string_view kPerformLocalTask = "PerformLocalTask";
inline constexpr std::string_view kIdle = "Idle";
}  // namespace leaf

/// Sequence(Selector(LocalTaskFinished, NewGlobalTaskExecuted),
///          CheckConsistency, AssignAgents)
inline Node build_task_assignment_tree() {
  return sequence({
      selector({condition(std::string(leaf::kLocalTaskFinished)),
                condition(std::string(leaf::kNewGlobalTaskExecuted))}),
      condition(std::string(leaf::kCheckConsistency)),
      action(std::string(leaf::kAssignAgents)),
  });
}

/// The scenario's mission tree below its root node, with every global-task
/// reference checked.
inline Node build_global_tree(const Scenario& scenario) {
  for (const auto& id : referenced_global_tasks(scenario.mission))
    if (!scenario.global_index(id)) throw ConfigError("mission tree references unknown global task '" + id + "'");
  require_well_formed(scenario.mission);
  return scenario.mission.kind == NodeKind::Root ? scenario.mission.children.front() : scenario.mission;
}

/// Selector over the robot's capabilities of Sequence(AssignedTo l,
/// PerformLocalTask l), closed by an always-succeeding idle leaf.
inline Node build_local_tree(const Robot& robot, const Scenario& scenario) {
  auto caps = robot.capabilities();
  if (caps.empty()) throw ConfigError("robot '" + robot.name + "' has no capabilities");
  std::vector<Node> branches;
  for (auto j : caps) {
    const std::string& id = scenario.local_tasks.at(j).id;
    branches.push_back(sequence({condition(std::string(leaf::kAssignedTo), {id}),
                                 action(std::string(leaf::kPerformLocalTask), {id})}));
  }
  branches.push_back(action(std::string(leaf::kIdle)));
  return selector(std::move(branches));
}

/// Parallel(T_A, T_G, T_L, 3).
inline Node compose_robot_tree(Node assignment, Node global, Node local) {
  return parallel({std::move(assignment), std::move(global), std::move(local)}, 3);
}

/// Selector(tree, Idle): a quiet T_A tick (no trigger) must not fail the
/// M = 3 root.
inline Node absorb_failure(Node tree) {
  return selector({std::move(tree), action(std::string(leaf::kIdle))});
}

/// The full tree robot `robot` runs.
inline Node build_robot_tree(const Scenario& scenario, std::size_t robot) {
  return compose_robot_tree(absorb_failure(build_task_assignment_tree()), build_global_tree(scenario),
                            build_local_tree(scenario.robots.at(robot), scenario));
}

// Global-task nodes ------------------------------------------------------------

enum class GlobalPhase { Idle, Requested, Active, Succeeded, Failed };

constexpr std::string_view to_string(GlobalPhase p) noexcept {
  switch (p) {
    case GlobalPhase::Idle: return "idle";
    case GlobalPhase::Requested: return "requested";
    case GlobalPhase::Active: return "active";
    case GlobalPhase::Succeeded: return "succeeded";
    case GlobalPhase::Failed: return "failed";
  }
  return "?";
}

struct LocalTally {
  unsigned assigned = 0;   // robots ever bound to this (global, local) pair
  unsigned succeeded = 0;
  unsigned failed = 0;
  unsigned aborted = 0;    // bound robots lost to faults before finishing
  friend bool operator==(const LocalTally&, const LocalTally&) = default;
};

/// Runtime counters of one "Perform Global Task" node.
struct GlobalTaskProgress {
  GlobalPhase phase = GlobalPhase::Idle;
  std::map<std::size_t, LocalTally> tallies;  // keyed by local-task index
  friend bool operator==(const GlobalTaskProgress&, const GlobalTaskProgress&) = default;
};

/// Status of an active global task from its counters.
///
/// Success once every local task in psi reached nu successes. Failure once
/// some local task has failures and failed > (assigned - aborted) - nu,
/// i.e. the robots still in play cannot reach nu. Running otherwise.
inline Status evaluate_global_task(const GlobalTask& task, const GlobalTaskProgress& progress) {
  bool all_done = true;
  for (const auto& d : task.demands) {
    LocalTally t;
    if (auto it = progress.tallies.find(d.local); it != progress.tallies.end()) t = it->second;
    const long in_play = static_cast<long>(t.assigned) - static_cast<long>(t.aborted);
    if (t.failed > 0 && static_cast<long>(t.failed) > in_play - static_cast<long>(d.min_robots))
      return Status::Failure;
    if (t.succeeded < d.min_robots) all_done = false;
  }
  return all_done ? Status::Success : Status::Running;
}

// Translation ------------------------------------------------------------------

struct Translation {
  Node mission;
  std::vector<GlobalTask> global_tasks;
};

namespace detail {

struct SingleLeaf {
  std::string alpha;
  std::string id;
  std::vector<std::string> effect;
};

inline SingleLeaf read_single_leaf(const Node& n) {
  SingleLeaf out{n.name, n.name, {}};
  for (std::size_t i = 0; i < n.args.size(); ++i) {
    if (n.args[i] == "as" && i + 1 < n.args.size()) {
      out.id = n.args[++i];
    } else if (n.args[i] == "effect") {
      out.effect.assign(n.args.begin() + static_cast<long>(i) + 1, n.args.end());
      break;
    } else {
      throw TranslationError("action '" + n.name + "'" + (n.line ? " (line " + std::to_string(n.line) + ")" : "") +
                             ": unexpected token '" + n.args[i] + "'");
    }
  }
  return out;
}

class Translator {
 public:
  Translator(const Scenario& scenario, bool parallelize)
      : scenario_(scenario), covered_(scenario.all_local_tasks()), parallelize_(parallelize) {}

  Node operator()(const Node& n) {
    switch (n.kind) {
      case NodeKind::Action: return global_leaf(n);
      case NodeKind::Condition: return plain_copy(n);
      case NodeKind::Root: return root((*this)(n.children.at(0)));
      case NodeKind::Parallel: {
        Node out = plain_copy(n);
        out.children = children(n);
        return out;
      }
      case NodeKind::Sequence:
      case NodeKind::Selector: {
        auto kids = children(n);
        if (parallelize_ && n.parallelizable) {
          std::size_t m = n.kind == NodeKind::Sequence ? kids.size() : 1;
          Node out = parallel(std::move(kids), m);
          out.line = n.line;
          return out;
        }
        Node out = plain_copy(n);
        out.parallelizable = false;
        out.children = std::move(kids);
        return out;
      }
    }
    return n;
  }

  std::vector<GlobalTask> take_tasks() { return std::move(tasks_); }

 private:
  static Node plain_copy(const Node& n) {
    Node out = n;
    out.children.clear();
    return out;
  }

  std::vector<Node> children(const Node& n) {
    std::vector<Node> out;
    for (const auto& c : n.children) out.push_back((*this)(c));
    return out;
  }

  Node global_leaf(const Node& n) {
    SingleLeaf leaf = read_single_leaf(n);
    auto j = scenario_.local_index(leaf.alpha);
    if (!j || !covered_.count(*j))
      throw TranslationError("action '" + leaf.alpha + "'" + (n.line ? " (line " + std::to_string(n.line) + ")" : "") +
                             " is not a local task any robot of the fleet can perform");
    std::string id = leaf.id;
    for (unsigned k = 2; !ids_.insert(id).second; ++k) id = leaf.id + "_" + std::to_string(k);
    GlobalTask g;
    g.id = id;
    g.demands.push_back({*j, 1, 1});
    g.effect = leaf.effect;
    g.line = n.line;
    tasks_.push_back(std::move(g));
    Node out = global_task_node(id);
    out.line = n.line;
    return out;
  }

  const Scenario& scenario_;
  std::set<std::size_t> covered_;
  bool parallelize_;
  std::set<std::string> ids_;
  std::vector<GlobalTask> tasks_;
};

}  // namespace detail

/// Maps a single-robot tree onto the fleet: each action becomes a global
/// task with psi = {action's local task} and nu = mu = 1; sequences and
/// selectors flagged parallelizable become Parallel(M=N) and Parallel(M=1).
/// With `parallelize` false the control structure is kept as is.
///
/// Single-robot leaves read `(action <local-task> [as <global-id>] [effect ...])`.
inline Translation translate(const Node& single, const Scenario& scenario, bool parallelize = true) {
  require_well_formed(single);
  detail::Translator t(scenario, parallelize);
  Translation out;
  out.mission = t(single);
  out.global_tasks = t.take_tasks();
  return out;
}

/// Installs a translation as the scenario's mission.
inline Scenario with_translation(Scenario scenario, const Translation& tr) {
  scenario.global_tasks = tr.global_tasks;
  scenario.mission = tr.mission;
  return scenario;
}

}  // namespace mrbt

#pragma once

/// @file bt.hpp
/// @brief Behavior-tree value type and the memoryless tick evaluator.
///
/// A tree is an immutable `Node` value. Ticking it never changes the tree;
/// every side effect goes through the `TickContext` callbacks. Every tick
/// restarts from the root, so a Sequence re-ticks children that already
/// succeeded and actions are expected to keep reporting their terminal
/// status once done.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mrbt/error.hpp"

namespace mrbt {

enum class Status { Success, Failure, Running };

constexpr std::string_view to_string(Status s) noexcept {
  switch (s) {
    case Status::Success: return "success";
    case Status::Failure: return "failure";
    case Status::Running: return "running";
  }
  return "?";
}

constexpr bool is_terminal(Status s) noexcept { return s != Status::Running; }

/// Success <-> Failure; Running is fixed.
constexpr Status swap_terminal(Status s) noexcept {
  if (s == Status::Success) return Status::Failure;
  if (s == Status::Failure) return Status::Success;
  return s;
}

enum class NodeKind { Root, Selector, Sequence, Parallel, Action, Condition };

constexpr std::string_view to_string(NodeKind k) noexcept {
  switch (k) {
    case NodeKind::Root: return "root";
    case NodeKind::Selector: return "selector";
    case NodeKind::Sequence: return "sequence";
    case NodeKind::Parallel: return "parallel";
    case NodeKind::Action: return "action";
    case NodeKind::Condition: return "condition";
  }
  return "?";
}

struct Node {
  NodeKind kind = NodeKind::Action;
  /// Action or condition id; empty for control nodes.
  std::string name;
  /// Extra leaf parameters (a global-task id, a part number, ...).
  std::vector<std::string> args;
  /// Success threshold M of a parallel node.
  std::size_t threshold = 0;
  /// Author annotation on sequence/selector nodes of single-robot trees.
  bool parallelizable = false;
  std::vector<Node> children;
  /// Source line, 0 when built in code. Ignored by equality.
  std::size_t line = 0;

  bool is_leaf() const noexcept {
    return kind == NodeKind::Action || kind == NodeKind::Condition;
  }
  bool is_control() const noexcept {
    return kind == NodeKind::Selector || kind == NodeKind::Sequence || kind == NodeKind::Parallel;
  }
  const std::string& arg(std::size_t i = 0) const {
    static const std::string empty;
    return i < args.size() ? args[i] : empty;
  }

  friend bool operator==(const Node& a, const Node& b) {
    return a.kind == b.kind && a.name == b.name && a.args == b.args &&
           a.threshold == b.threshold && a.parallelizable == b.parallelizable &&
           a.children == b.children;
  }
};

// Builders -----------------------------------------------------------------

inline Node root(Node child) {
  Node n;
  n.kind = NodeKind::Root;
  n.children.push_back(std::move(child));
  return n;
}

inline Node selector(std::vector<Node> children) {
  Node n;
  n.kind = NodeKind::Selector;
  n.children = std::move(children);
  return n;
}

inline Node sequence(std::vector<Node> children) {
  Node n;
  n.kind = NodeKind::Sequence;
  n.children = std::move(children);
  return n;
}

inline Node parallel(std::vector<Node> children, std::size_t threshold) {
  Node n;
  n.kind = NodeKind::Parallel;
  n.children = std::move(children);
  n.threshold = threshold;
  return n;
}

inline Node action(std::string name, std::vector<std::string> args = {}) {
  Node n;
  n.kind = NodeKind::Action;
  n.name = std::move(name);
  n.args = std::move(args);
  return n;
}

inline Node condition(std::string name, std::vector<std::string> args = {}) {
  Node n;
  n.kind = NodeKind::Condition;
  n.name = std::move(name);
  n.args = std::move(args);
  return n;
}

// Structural checks --------------------------------------------------------

/// Collects every structural invariant violation of the tree rooted at `n`.
inline void collect_structure_errors(const Node& n, std::vector<std::string>& out,
                                     bool is_top = true) {
  auto where = [&] {
    std::string s(to_string(n.kind));
    if (!n.name.empty()) s += " '" + n.name + "'";
    if (n.line) s += " (line " + std::to_string(n.line) + ")";
    return s;
  };
  switch (n.kind) {
    case NodeKind::Root:
      if (!is_top) out.push_back(where() + ": root node below the top of the tree");
      if (n.children.size() != 1) out.push_back(where() + ": root needs exactly one child");
      break;
    case NodeKind::Selector:
    case NodeKind::Sequence:
      if (n.children.empty()) out.push_back(where() + ": control node without children");
      break;
    case NodeKind::Parallel:
      if (n.children.empty()) out.push_back(where() + ": control node without children");
      if (n.threshold < 1 || n.threshold > n.children.size())
        out.push_back(where() + ": threshold M=" + std::to_string(n.threshold) +
                      " outside 1.." + std::to_string(n.children.size()));
      break;
    case NodeKind::Action:
    case NodeKind::Condition:
      if (!n.children.empty()) out.push_back(where() + ": leaf node with children");
      if (n.name.empty()) out.push_back(where() + ": leaf without an id");
      break;
  }
  if (n.parallelizable && n.kind != NodeKind::Sequence && n.kind != NodeKind::Selector)
    out.push_back(where() + ": parallelizable flag on a non sequence/selector node");
  for (const auto& c : n.children) collect_structure_errors(c, out, false);
}

inline std::vector<std::string> structure_errors(const Node& tree) {
  std::vector<std::string> out;
  collect_structure_errors(tree, out);
  return out;
}

inline void require_well_formed(const Node& tree) {
  auto errors = structure_errors(tree);
  if (errors.empty()) return;
  std::string msg = "malformed tree:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

/// Visits every node in pre-order.
template <typename F>
void for_each_node(const Node& n, F&& f) {
  f(n);
  for (const auto& c : n.children) for_each_node(c, f);
}

inline std::size_t leaf_count(const Node& n) {
  std::size_t count = 0;
  for_each_node(n, [&](const Node& x) { count += x.is_leaf() ? 1 : 0; });
  return count;
}

// Ticking ------------------------------------------------------------------

/// Callback surface for leaves. Conditions are const: they may only read.
/// Implementations throw ConfigError for ids they cannot resolve.
class TickContext {
 public:
  virtual ~TickContext() = default;
  virtual Status act(const Node& action) = 0;
  virtual bool check(const Node& condition) const = 0;

  std::uint64_t tick = 0;
};

/// Receives (node, status) after each node finishes evaluating this tick.
using TickObserver = std::function<void(const Node&, Status)>;

namespace rules {

/// Selector: first non-Failure child decides.
constexpr bool selector_decides(Status child) noexcept { return child != Status::Failure; }
/// Sequence: first non-Success child decides.
constexpr bool sequence_decides(Status child) noexcept { return child != Status::Success; }

/// Parallel over N children with threshold M, given the success and running
/// counts: Success iff S >= M, Failure iff S + R < M, Running otherwise.
constexpr Status parallel(std::size_t successes, std::size_t running,
                          std::size_t threshold) noexcept {
  if (successes >= threshold) return Status::Success;
  if (successes + running < threshold) return Status::Failure;
  return Status::Running;
}

}  // namespace rules

namespace detail {

inline Status tick_node(const Node& n, TickContext& ctx, const TickObserver* obs) {
  Status result = Status::Failure;
  switch (n.kind) {
    case NodeKind::Root:
      if (n.children.size() != 1) throw ConfigError("root node needs exactly one child");
      result = tick_node(n.children.front(), ctx, obs);
      break;
    case NodeKind::Selector:
      result = Status::Failure;
      for (const auto& c : n.children) {
        Status s = tick_node(c, ctx, obs);
        if (rules::selector_decides(s)) {
          result = s;
          break;
        }
      }
      break;
    case NodeKind::Sequence:
      result = Status::Success;
      for (const auto& c : n.children) {
        Status s = tick_node(c, ctx, obs);
        if (rules::sequence_decides(s)) {
          result = s;
          break;
        }
      }
      break;
    case NodeKind::Parallel: {
      std::size_t successes = 0;
      std::size_t running = 0;
      for (const auto& c : n.children) {
        Status s = tick_node(c, ctx, obs);
        successes += s == Status::Success;
        running += s == Status::Running;
      }
      result = rules::parallel(successes, running, n.threshold);
      break;
    }
    case NodeKind::Action:
      result = ctx.act(n);
      break;
    case NodeKind::Condition:
      result = ctx.check(n) ? Status::Success : Status::Failure;
      break;
  }
  if (obs && *obs) (*obs)(n, result);
  return result;
}

}  // namespace detail

/// Ticks `tree` once from its top node.
inline Status tick(const Node& tree, TickContext& ctx, const TickObserver& observer = {}) {
  return detail::tick_node(tree, ctx, observer ? &observer : nullptr);
}

}  // namespace mrbt

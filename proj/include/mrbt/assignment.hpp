#pragma once

/// @file assignment.hpp
/// @brief Reactive robot-to-task assignment.
///
/// The program is the 0-1 problem
///
///     maximize   sum_i sum_j p(i,j) r(i,j)
///     subject to a_j <= sum_i r(i,j) <= b_j      for every local task j
///                sum_j r(i,j) <= 1               for every robot i
///                r(i,j) = 0 where p(i,j) = -inf
///
/// plus optional pins (robots held on their current task) and exclusions.
/// `solve` is an exact branch and bound; `check_consistency` decides
/// feasibility through bipartite matching, independently of the solver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrbt/error.hpp"
#include "mrbt/mission.hpp"

namespace mrbt {

// Bounds ---------------------------------------------------------------------

/// a_j and b_j, kept as per-global-task contributions so that co-active
/// global tasks sharing a local task stack their demands and can be
/// released independently.
class Bounds {
 public:
  struct Slot {
    std::size_t local = 0;
    unsigned lower = 0;
    unsigned upper = 0;
    friend bool operator==(const Slot&, const Slot&) = default;
  };
  struct Contribution {
    std::string global;
    std::vector<Slot> slots;
    friend bool operator==(const Contribution&, const Contribution&) = default;
  };

  explicit Bounds(std::size_t tasks = 0) : tasks_(tasks) {}

  std::size_t tasks() const noexcept { return tasks_; }

  unsigned lower(std::size_t local) const { return total(local, &Slot::lower); }
  unsigned upper(std::size_t local) const { return total(local, &Slot::upper); }

  std::vector<unsigned> lowers() const { return totals(&Slot::lower); }
  std::vector<unsigned> uppers() const { return totals(&Slot::upper); }

  /// Active contributions in activation order.
  const std::vector<Contribution>& contributions() const noexcept { return active_; }

  const Contribution* find(std::string_view global) const {
    for (const auto& c : active_)
      if (c.global == global) return &c;
    return nullptr;
  }
  bool is_active(std::string_view global) const { return find(global) != nullptr; }

  friend bool operator==(const Bounds&, const Bounds&) = default;

 private:
  friend Bounds activate_global_task(Bounds, const GlobalTask&);
  friend Bounds on_local_task_finished(Bounds, std::size_t, std::string_view);
  friend Bounds deactivate_global_task(Bounds, std::string_view);

  unsigned total(std::size_t local, unsigned Slot::*field) const {
    unsigned sum = 0;
    for (const auto& c : active_)
      for (const auto& s : c.slots)
        if (s.local == local) sum += s.*field;
    return sum;
  }
  std::vector<unsigned> totals(unsigned Slot::*field) const {
    std::vector<unsigned> out(tasks_, 0);
    for (const auto& c : active_)
      for (const auto& s : c.slots) out.at(s.local) += s.*field;
    return out;
  }

  std::size_t tasks_;
  std::vector<Contribution> active_;
};

/// a_j += nu(g, j), b_j += mu(g, j) for every j in psi(g).
inline Bounds activate_global_task(Bounds bounds, const GlobalTask& task) {
  if (bounds.is_active(task.id))
    throw ContractViolation("global task '" + task.id + "' is already active");
  Bounds::Contribution c{task.id, {}};
  for (const auto& d : task.demands) {
    if (d.local >= bounds.tasks_)
      throw ConfigError("global task '" + task.id + "' demands local task index " + std::to_string(d.local) +
                        " outside the bounds table");
    c.slots.push_back({d.local, d.min_robots, d.max_robots});
  }
  bounds.active_.push_back(std::move(c));
  return bounds;
}

/// One robot finished `local` for `global`: both bounds drop by one,
/// each clamped at zero.
inline Bounds on_local_task_finished(Bounds bounds, std::size_t local, std::string_view global) {
  for (auto& c : bounds.active_) {
    if (c.global != global) continue;
    for (auto& s : c.slots) {
      if (s.local != local) continue;
      if (s.lower > 0) --s.lower;
      if (s.upper > 0) --s.upper;
    }
  }
  return bounds;
}

/// Removes what is left of `global`'s contribution. No-op for idle tasks.
inline Bounds deactivate_global_task(Bounds bounds, std::string_view global) {
  std::erase_if(bounds.active_, [&](const Bounds::Contribution& c) { return c.global == global; });
  return bounds;
}

// Problem and solution -------------------------------------------------------

struct AssignmentProblem {
  PerformanceTable performance;
  std::vector<unsigned> lower;
  std::vector<unsigned> upper;
  /// Either empty or one entry per robot; a pinned robot keeps its task.
  std::vector<std::optional<std::size_t>> pinned;

  std::size_t robots() const noexcept { return performance.robots(); }
  std::size_t tasks() const noexcept { return performance.tasks(); }

  std::optional<std::size_t> pin(std::size_t robot) const {
    return pinned.empty() ? std::nullopt : pinned[robot];
  }

  void check() const {
    if (lower.size() != tasks() || upper.size() != tasks())
      throw ConfigError("assignment problem: bounds cover " + std::to_string(lower.size()) + "/" +
                        std::to_string(upper.size()) + " tasks, performance table has " +
                        std::to_string(tasks()));
    if (!pinned.empty() && pinned.size() != robots())
      throw ConfigError("assignment problem: " + std::to_string(pinned.size()) + " pin entries for " +
                        std::to_string(robots()) + " robots");
    for (const auto& p : pinned)
      if (p && *p >= tasks()) throw ConfigError("assignment problem: pin to unknown task index");
  }
};

inline AssignmentProblem make_problem(const Bounds& bounds, PerformanceTable performance,
                                      std::vector<std::optional<std::size_t>> pinned = {}) {
  return {std::move(performance), bounds.lowers(), bounds.uppers(), std::move(pinned)};
}

enum class ExclusionScope {
  /// r(robot, task) * r(other, task) = 0
  SameTask,
  /// r(robot, task) = 1 forces `other` to stay unassigned.
  Undeployed,
};

struct ExclusionConstraint {
  std::size_t robot = 0;
  std::size_t other = 0;
  std::size_t task = 0;
  ExclusionScope scope = ExclusionScope::SameTask;
};

struct Assignment {
  /// Task of each robot, nullopt when not deployed.
  std::vector<std::optional<std::size_t>> choice;
  double objective = 0.0;

  bool assigned(std::size_t robot, std::size_t task) const { return choice.at(robot) == task; }

  std::size_t count(std::size_t task) const {
    return static_cast<std::size_t>(std::count(choice.begin(), choice.end(), std::optional<std::size_t>(task)));
  }

  /// The r matrix, robots by tasks.
  std::vector<std::vector<int>> matrix(std::size_t tasks) const {
    std::vector<std::vector<int>> r(choice.size(), std::vector<int>(tasks, 0));
    for (std::size_t i = 0; i < choice.size(); ++i)
      if (choice[i]) r[i][*choice[i]] = 1;
    return r;
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

inline bool violates(const ExclusionConstraint& e, const std::vector<std::optional<std::size_t>>& choice) {
  if (choice[e.robot] != e.task) return false;
  if (e.scope == ExclusionScope::SameTask) return choice[e.other] == e.task;
  return choice[e.other].has_value();
}

/// Tolerance used when comparing objectives; ties inside it fall to the
/// lexicographic rule.
inline bool strictly_better(double candidate, double incumbent) {
  return candidate > incumbent + 1e-9 * std::max(1.0, std::abs(incumbent));
}

namespace detail {

class BranchAndBound {
 public:
  BranchAndBound(const AssignmentProblem& problem, std::span<const ExclusionConstraint> exclusions)
      : p_(problem),
        n_(problem.robots()),
        t_(problem.tasks()),
        by_later_(n_),
        optimistic_(n_ + 1, 0.0),
        capable_from_(n_ + 1, std::vector<unsigned>(t_, 0)),
        count_(t_, 0),
        choice_(n_) {
    for (const auto& e : exclusions) {
      if (e.robot >= n_ || e.other >= n_ || e.task >= t_)
        throw ConfigError("exclusion references an unknown robot or task");
      if (e.robot == e.other) throw ConfigError("exclusion pairs a robot with itself");
      by_later_[std::max(e.robot, e.other)].push_back(e);
    }
    for (std::size_t i = n_; i-- > 0;) {
      double best = 0.0;
      if (auto pin = p_.pin(i)) {
        best = p_.performance(i, *pin);
      } else {
        for (std::size_t j = 0; j < t_; ++j)
          if (allowed(i, j)) best = std::max(best, p_.performance(i, j));
      }
      optimistic_[i] = optimistic_[i + 1] + best;
      for (std::size_t j = 0; j < t_; ++j)
        capable_from_[i][j] = capable_from_[i + 1][j] + (allowed(i, j) ? 1u : 0u);
    }
  }

  std::optional<Assignment> run() {
    for (std::size_t j = 0; j < t_; ++j)
      if (p_.lower[j] > p_.upper[j]) return std::nullopt;
    search(0, 0.0);
    return best_;
  }

 private:
  bool allowed(std::size_t i, std::size_t j) const {
    if (p_.upper[j] == 0 || !p_.performance.capable(i, j)) return false;
    auto pin = p_.pin(i);
    return !pin || *pin == j;
  }

  bool lower_bounds_reachable(std::size_t next) const {
    unsigned total = 0;
    for (std::size_t j = 0; j < t_; ++j) {
      unsigned deficit = p_.lower[j] > count_[j] ? p_.lower[j] - count_[j] : 0;
      if (deficit > capable_from_[next][j]) return false;
      total += deficit;
    }
    return total <= n_ - next;
  }

  bool exclusions_hold(std::size_t i) const {
    for (const auto& e : by_later_[i])
      if (violates(e, choice_)) return false;
    return true;
  }

  void search(std::size_t i, double value) {
    if (best_ && !strictly_better(value + optimistic_[i], best_->objective)) return;
    if (!lower_bounds_reachable(i)) return;
    if (i == n_) {
      best_ = Assignment{choice_, value};
      return;
    }
    for (std::size_t j = 0; j < t_; ++j) {
      if (!allowed(i, j) || count_[j] >= p_.upper[j]) continue;
      choice_[i] = j;
      ++count_[j];
      if (exclusions_hold(i)) search(i + 1, value + p_.performance(i, j));
      --count_[j];
    }
    choice_[i].reset();
    if (!p_.pin(i) && exclusions_hold(i)) search(i + 1, value);
  }

  const AssignmentProblem& p_;
  std::size_t n_;
  std::size_t t_;
  std::vector<std::vector<ExclusionConstraint>> by_later_;
  std::vector<double> optimistic_;
  std::vector<std::vector<unsigned>> capable_from_;
  std::vector<unsigned> count_;
  std::vector<std::optional<std::size_t>> choice_;
  std::optional<Assignment> best_;
};

}  // namespace detail

/// Exact optimum, or nullopt when infeasible.
///
/// Robots are branched in index order, each over its capable tasks in
/// scenario order and then "idle". Among optima the first one reached wins,
/// i.e. the lexicographically smallest per-robot choice vector with idle
/// ranked after every task. The bound is the sum of each remaining robot's
/// best non-negative performance.
inline std::optional<Assignment> solve(const AssignmentProblem& problem,
                                       std::span<const ExclusionConstraint> exclusions = {}) {
  problem.check();
  return detail::BranchAndBound(problem, exclusions).run();
}

// Feasibility by matching ----------------------------------------------------

/// Whether any r satisfies the bounds and pins. Exclusions are not
/// considered; use `solve` for those.
inline bool is_feasible(const AssignmentProblem& problem) {
  problem.check();
  const std::size_t n = problem.robots();
  const std::size_t t = problem.tasks();
  std::vector<unsigned> pinned_count(t, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (auto pin = problem.pin(i)) {
      if (!problem.performance.capable(i, *pin)) return false;
      ++pinned_count[*pin];
    }
  }
  std::vector<std::size_t> slots;  // one entry per robot still needed, holding its task
  for (std::size_t j = 0; j < t; ++j) {
    if (problem.lower[j] > problem.upper[j] || pinned_count[j] > problem.upper[j]) return false;
    for (unsigned k = pinned_count[j]; k < problem.lower[j]; ++k) slots.push_back(j);
  }

  // Kuhn's augmenting paths: free robots on the left, needed slots on the right.
  std::vector<long> slot_of_robot(n, -1);
  std::vector<char> seen(n);
  auto augment = [&](auto&& self, std::size_t slot) -> bool {
    for (std::size_t i = 0; i < n; ++i) {
      if (problem.pin(i) || seen[i] || !problem.performance.capable(i, slots[slot])) continue;
      seen[i] = 1;
      if (slot_of_robot[i] < 0 || self(self, static_cast<std::size_t>(slot_of_robot[i]))) {
        slot_of_robot[i] = static_cast<long>(slot);
        return true;
      }
    }
    return false;
  };
  for (std::size_t s = 0; s < slots.size(); ++s) {
    std::fill(seen.begin(), seen.end(), 0);
    if (!augment(augment, s)) return false;
  }
  return true;
}

/// Additive change proposed by a global task about to activate.
struct BoundChange {
  std::size_t local = 0;
  unsigned lower = 0;
  unsigned upper = 0;
};

inline std::vector<BoundChange> changes_for(const GlobalTask& task) {
  std::vector<BoundChange> out;
  for (const auto& d : task.demands) out.push_back({d.local, d.min_robots, d.max_robots});
  return out;
}

/// Would the program stay feasible with `changes` added? Does not commit.
inline bool check_consistency(const AssignmentProblem& problem, std::span<const BoundChange> changes) {
  AssignmentProblem candidate = problem;
  candidate.check();
  for (const auto& c : changes) {
    if (c.local >= candidate.tasks()) throw ConfigError("bound change on unknown task index");
    candidate.lower[c.local] += c.lower;
    candidate.upper[c.local] += c.upper;
  }
  return is_feasible(candidate);
}

}  // namespace mrbt

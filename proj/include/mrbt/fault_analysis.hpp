#pragma once

/// @file fault_analysis.hpp
/// @brief Minor/major robot faults, weak and strong fault tolerance, and
/// the largest fault sets a mission can absorb.
///
/// A fault set is tolerated when every activation profile of the mission
/// tree (the bounds one global task opens on its own) still admits a
/// feasible assignment.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mrbt/assignment.hpp"
#include "mrbt/error.hpp"
#include "mrbt/mission.hpp"

namespace mrbt {

struct Fault {
  enum class Kind { Minor, Major };

  Kind kind = Kind::Major;
  std::size_t robot = 0;
  std::set<std::size_t> tasks;  // lost local tasks, minor faults only

  static Fault major(std::size_t robot) { return {Kind::Major, robot, {}}; }
  static Fault minor(std::size_t robot, std::set<std::size_t> tasks) {
    return {Kind::Minor, robot, std::move(tasks)};
  }

  /// lambda; a major fault counts as the whole capability set.
  std::size_t level(const Scenario& s) const {
    return kind == Kind::Major ? s.robots.at(robot).capabilities().size() : tasks.size();
  }

  friend bool operator==(const Fault&, const Fault&) = default;
};

constexpr std::string_view to_string(Fault::Kind k) noexcept {
  return k == Fault::Kind::Major ? "major" : "minor";
}

inline std::string describe(const Fault& f, const Scenario& s) {
  std::string out = std::string(to_string(f.kind)) + " " + s.robots.at(f.robot).name;
  for (auto j : f.tasks) out += " " + s.local_tasks.at(j).id;
  return out;
}

inline void check_fault(const Scenario& s, const Fault& f) {
  if (f.robot >= s.robots.size()) throw ConfigError("fault names unknown robot index " + std::to_string(f.robot + 1));
  const Robot& r = s.robots[f.robot];
  if (r.fault.major) throw ConfigError("robot '" + r.name + "' already has a major fault");
  if (f.kind == Fault::Kind::Major) return;
  if (f.tasks.empty()) throw ConfigError("minor fault on '" + r.name + "' names no local task");
  for (auto j : f.tasks)
    if (!r.has_capability(j))
      throw ConfigError("minor fault on '" + r.name + "': '" +
                        (j < s.local_tasks.size() ? s.local_tasks[j].id : std::to_string(j)) +
                        "' is not in its capability set");
}

/// Minor: p(i, l) = -inf for the listed tasks. Major: the whole row.
inline Scenario apply_fault(Scenario s, const Fault& f) {
  check_fault(s, f);
  auto& state = s.robots[f.robot].fault;
  if (f.kind == Fault::Kind::Major)
    state.major = true;
  else
    state.lost.insert(f.tasks.begin(), f.tasks.end());
  return s;
}

// Activation profiles ----------------------------------------------------------

struct ActivationProfile {
  std::string global;  // first global task producing these bounds
  std::vector<unsigned> lower;
  std::vector<unsigned> upper;

  bool needs(std::size_t local) const { return upper.at(local) > 0 || lower.at(local) > 0; }
};

/// One profile per global task referenced by the mission tree; identical
/// profiles are merged.
inline std::vector<ActivationProfile> activation_profiles(const Scenario& s) {
  std::vector<ActivationProfile> out;
  std::set<std::string> seen;
  for (const auto& id : referenced_global_tasks(s.mission)) {
    if (!seen.insert(id).second) continue;
    const GlobalTask& g = s.global_tasks.at(s.require_global(id));
    ActivationProfile p{g.id, std::vector<unsigned>(s.local_tasks.size(), 0),
                        std::vector<unsigned>(s.local_tasks.size(), 0)};
    for (const auto& d : g.demands) {
      p.lower.at(d.local) += d.min_robots;
      p.upper.at(d.local) += d.max_robots;
    }
    bool dup = std::any_of(out.begin(), out.end(),
                           [&](const ActivationProfile& q) { return q.lower == p.lower && q.upper == p.upper; });
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

inline AssignmentProblem profile_problem(const ActivationProfile& p, PerformanceTable perf) {
  return {std::move(perf), p.lower, p.upper, {}};
}

/// Every profile feasible under the scenario's current fault states.
inline bool tolerates(const Scenario& s) {
  const auto perf = s.performance();
  for (const auto& p : activation_profiles(s))
    if (!is_feasible(profile_problem(p, perf))) return false;
  return true;
}

inline bool tolerates(Scenario s, const std::vector<Fault>& faults) {
  for (const auto& f : faults) s = apply_fault(std::move(s), f);
  return tolerates(s);
}

// Weak and strong tolerance ----------------------------------------------------

struct CapabilityRef {
  std::size_t robot = 0;
  std::size_t local = 0;
  friend bool operator==(const CapabilityRef&, const CapabilityRef&) = default;
  friend auto operator<=>(const CapabilityRef&, const CapabilityRef&) = default;
};

struct WeakResult {
  bool tolerant = true;
  std::vector<CapabilityRef> violations;  // (robot, local task) pairs with no backup
};

struct StrongResult {
  bool tolerant = true;
  std::vector<std::size_t> witnesses;  // robots whose loss cannot be absorbed
};

/// For every robot i and l in L_i: some other robot h can perform l and
/// every profile needing l stays feasible when i working on l keeps h
/// undeployed.
inline WeakResult is_weakly_fault_tolerant(const Scenario& s) {
  WeakResult out;
  const auto perf = s.performance();
  const auto profiles = activation_profiles(s);
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    for (std::size_t l = 0; l < s.local_tasks.size(); ++l) {
      if (!s.robots[i].capable(l)) continue;
      bool backed = false;
      for (std::size_t h = 0; h < s.robots.size() && !backed; ++h) {
        if (h == i || !s.robots[h].capable(l)) continue;
        const ExclusionConstraint e{i, h, l, ExclusionScope::Undeployed};
        backed = std::all_of(profiles.begin(), profiles.end(), [&](const ActivationProfile& p) {
          return !p.needs(l) || solve(profile_problem(p, perf), std::span(&e, 1)).has_value();
        });
      }
      if (!backed) out.violations.push_back({i, l});
    }
  }
  out.tolerant = out.violations.empty();
  return out;
}

/// For every robot i, the other live robots I cover L_i and every profile
/// stays feasible when i working on any of its tasks keeps all of I
/// undeployed.
inline StrongResult is_strongly_fault_tolerant(const Scenario& s) {
  StrongResult out;
  const auto perf = s.performance();
  const auto profiles = activation_profiles(s);
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    if (s.robots[i].fault.major) continue;
    std::vector<std::size_t> others;
    for (std::size_t h = 0; h < s.robots.size(); ++h)
      if (h != i && !s.robots[h].fault.major) others.push_back(h);
    bool ok = true;
    std::vector<ExclusionConstraint> exclusions;
    for (std::size_t l = 0; l < s.local_tasks.size() && ok; ++l) {
      if (!s.robots[i].capable(l)) continue;
      ok = std::any_of(others.begin(), others.end(), [&](std::size_t h) { return s.robots[h].capable(l); });
      for (auto h : others) exclusions.push_back({i, h, l, ExclusionScope::Undeployed});
    }
    if (ok)
      ok = std::all_of(profiles.begin(), profiles.end(), [&](const ActivationProfile& p) {
        return solve(profile_problem(p, perf), exclusions).has_value();
      });
    if (!ok) out.witnesses.push_back(i);
  }
  out.tolerant = out.witnesses.empty();
  return out;
}

// Largest tolerated fault sets ---------------------------------------------------

inline constexpr std::size_t kMaxSearchItems = 24;

struct MaxToleranceResult {
  Fault::Kind kind = Fault::Kind::Major;
  std::size_t items = 0;          // candidate faults searched over
  bool bound_exceeded = false;    // too many candidates; count and witness are meaningless
  bool baseline_feasible = true;  // the fault-free fleet passes every profile
  std::size_t count = 0;
  std::vector<Fault> witness;     // level-1 minor faults or major faults
  std::vector<std::size_t> surviving_robots;
  std::vector<CapabilityRef> surviving_capabilities;
};

namespace detail {

class ToleranceSearch {
 public:
  ToleranceSearch(const Scenario& s, std::vector<std::vector<CapabilityRef>> item_cells)
      : perf_(s.performance()), profiles_(activation_profiles(s)), items_(std::move(item_cells)) {}

  bool tolerated(std::uint32_t mask) {
    if (auto it = memo_.find(mask); it != memo_.end()) return it->second;
    PerformanceTable perf = perf_;
    for (std::size_t k = 0; k < items_.size(); ++k)
      if (mask & (1u << k))
        for (const auto& c : items_[k]) perf.at(c.robot, c.local) = kIncapable;
    bool ok = std::all_of(profiles_.begin(), profiles_.end(),
                          [&](const ActivationProfile& p) { return is_feasible(profile_problem(p, perf)); });
    memo_.emplace(mask, ok);
    return ok;
  }

  /// Lexicographically first tolerated set of exactly `size` items.
  std::optional<std::uint32_t> first_of_size(std::size_t size) { return dfs(0, 0, 0, size); }

 private:
  std::optional<std::uint32_t> dfs(std::size_t start, std::uint32_t mask, std::size_t depth, std::size_t size) {
    if (depth == size) return mask;
    for (std::size_t k = start; k + (size - depth) <= items_.size(); ++k) {
      std::uint32_t next = mask | (1u << k);
      if (!tolerated(next)) continue;
      if (auto found = dfs(k + 1, next, depth + 1, size)) return found;
    }
    return std::nullopt;
  }

  PerformanceTable perf_;
  std::vector<ActivationProfile> profiles_;
  std::vector<std::vector<CapabilityRef>> items_;
  std::unordered_map<std::uint32_t, bool> memo_;
};

}  // namespace detail

/// Largest k such that some set of k faults of `kind` is tolerated, by
/// iterative deepening over the set size. Minor candidates are single
/// (robot, task) capabilities; major candidates are live robots.
inline MaxToleranceResult max_tolerated(const Scenario& s, Fault::Kind kind,
                                        std::size_t item_limit = kMaxSearchItems) {
  MaxToleranceResult out;
  out.kind = kind;
  std::vector<Fault> faults;
  std::vector<std::vector<CapabilityRef>> cells;
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    const Robot& r = s.robots[i];
    if (r.fault.major) continue;
    std::vector<CapabilityRef> row;
    for (std::size_t l = 0; l < s.local_tasks.size(); ++l) {
      if (!r.capable(l)) continue;
      if (kind == Fault::Kind::Minor) {
        faults.push_back(Fault::minor(i, {l}));
        cells.push_back({{i, l}});
      } else {
        row.push_back({i, l});
      }
    }
    if (kind == Fault::Kind::Major) {
      faults.push_back(Fault::major(i));
      cells.push_back(std::move(row));
    }
  }
  out.items = faults.size();
  if (out.items > item_limit || out.items > 31) {
    out.bound_exceeded = true;
    return out;
  }

  detail::ToleranceSearch search(s, cells);
  std::uint32_t best = 0;
  out.baseline_feasible = search.tolerated(0);
  if (out.baseline_feasible) {
    for (std::size_t k = 1; k <= out.items; ++k) {
      auto found = search.first_of_size(k);
      if (!found) break;
      best = *found;
      out.count = k;
    }
  }

  std::set<CapabilityRef> lost;
  for (std::size_t k = 0; k < faults.size(); ++k) {
    if (!(best & (1u << k))) continue;
    out.witness.push_back(faults[k]);
    lost.insert(cells[k].begin(), cells[k].end());
  }
  for (std::size_t i = 0; i < s.robots.size(); ++i) {
    bool any = false;
    for (std::size_t l = 0; l < s.local_tasks.size(); ++l) {
      if (!s.robots[i].capable(l) || lost.count({i, l})) continue;
      out.surviving_capabilities.push_back({i, l});
      any = true;
    }
    if (any) out.surviving_robots.push_back(i);
  }
  return out;
}

// Report -----------------------------------------------------------------------

struct ToleranceReport {
  WeakResult weak;
  StrongResult strong;
  MaxToleranceResult max_major;
  MaxToleranceResult max_minor;
};

inline ToleranceReport analyze(const Scenario& s, std::size_t item_limit = kMaxSearchItems) {
  return {is_weakly_fault_tolerant(s), is_strongly_fault_tolerant(s),
          max_tolerated(s, Fault::Kind::Major, item_limit), max_tolerated(s, Fault::Kind::Minor, item_limit)};
}

namespace detail {

inline std::string capability_name(const CapabilityRef& c, const Scenario& s) {
  return s.robots.at(c.robot).name + "/" + s.local_tasks.at(c.local).id;
}

inline void print_max(std::ostream& os, const MaxToleranceResult& m, const Scenario& s) {
  os << "max " << to_string(m.kind) << " faults: ";
  if (m.bound_exceeded) {
    os << "search bound exceeded (" << m.items << " candidates)\n";
    return;
  }
  os << m.count;
  if (!m.baseline_feasible) os << " (the fault-free fleet already fails a profile)";
  os << "\n  witness:";
  if (m.witness.empty()) os << " none";
  for (const auto& f : m.witness) {
    os << ' ' << s.robots[f.robot].name;
    for (auto j : f.tasks) os << '/' << s.local_tasks[j].id;
  }
  os << "\n  still operating:";
  if (m.kind == Fault::Kind::Major) {
    for (auto i : m.surviving_robots) os << ' ' << s.robots[i].name;
  } else {
    for (const auto& c : m.surviving_capabilities) os << ' ' << capability_name(c, s);
  }
  os << '\n';
}

}  // namespace detail

inline std::string format_report(const ToleranceReport& r, const Scenario& s) {
  std::ostringstream os;
  os << "weakly fault tolerant: " << (r.weak.tolerant ? "yes" : "no") << '\n';
  for (const auto& v : r.weak.violations)
    os << "  no backup for " << s.robots[v.robot].name << " on " << s.local_tasks[v.local].id << '\n';
  os << "strongly fault tolerant: " << (r.strong.tolerant ? "yes" : "no") << '\n';
  for (auto i : r.strong.witnesses) os << "  losing " << s.robots[i].name << " cannot be absorbed\n";
  detail::print_max(os, r.max_major, s);
  detail::print_max(os, r.max_minor, s);
  return os.str();
}

inline nlohmann::ordered_json report_json(const ToleranceReport& r, const Scenario& s) {
  using nlohmann::ordered_json;
  auto cap = [&](const CapabilityRef& c) {
    return ordered_json{{"robot", s.robots[c.robot].name}, {"task", s.local_tasks[c.local].id}};
  };
  auto max_json = [&](const MaxToleranceResult& m) {
    ordered_json j;
    j["kind"] = std::string(to_string(m.kind));
    j["candidates"] = m.items;
    j["bound_exceeded"] = m.bound_exceeded;
    if (m.bound_exceeded) return j;
    j["count"] = m.count;
    j["baseline_feasible"] = m.baseline_feasible;
    ordered_json w = ordered_json::array();
    for (const auto& f : m.witness) {
      ordered_json x{{"robot", s.robots[f.robot].name}};
      if (f.kind == Fault::Kind::Minor) {
        ordered_json t = ordered_json::array();
        for (auto l : f.tasks) t.push_back(s.local_tasks[l].id);
        x["tasks"] = t;
      }
      w.push_back(x);
    }
    j["witness"] = w;
    ordered_json robots = ordered_json::array();
    for (auto i : m.surviving_robots) robots.push_back(s.robots[i].name);
    j["surviving_robots"] = robots;
    if (m.kind == Fault::Kind::Minor) {
      ordered_json caps = ordered_json::array();
      for (const auto& c : m.surviving_capabilities) caps.push_back(cap(c));
      j["surviving_capabilities"] = caps;
    }
    return j;
  };

  ordered_json out;
  out["scenario"] = s.name;
  ordered_json weak{{"tolerant", r.weak.tolerant}, {"violations", ordered_json::array()}};
  for (const auto& v : r.weak.violations) weak["violations"].push_back(cap(v));
  out["weak"] = weak;
  ordered_json strong{{"tolerant", r.strong.tolerant}, {"witnesses", ordered_json::array()}};
  for (auto i : r.strong.witnesses) strong["witnesses"].push_back(s.robots[i].name);
  out["strong"] = strong;
  out["max_major"] = max_json(r.max_major);
  out["max_minor"] = max_json(r.max_minor);
  return out;
}

}  // namespace mrbt

#pragma once

/// @file simulator.hpp
/// @brief Deterministic discrete-tick simulation of a fleet where every
/// robot runs Parallel(T_A, T_G, T_L, 3) against its own copy of the
/// mission state.
///
/// One tick:
///   1. due faults are injected; executions they cover are aborted;
///   2. every live replica ingests the shared inbox, then each live robot,
///      in index order, ticks its tree against its own replica;
///   3. running executions advance; finished ones apply their effect to the
///      world and post a message to the inbox for the next tick;
///   4. the tick's events are appended to the trace.
/// Messages are seen by every replica at the same point, so replicas agree
/// without talking to each other; the simulator checks that they do.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mrbt/assignment.hpp"
#include "mrbt/bt.hpp"
#include "mrbt/error.hpp"
#include "mrbt/fault_analysis.hpp"
#include "mrbt/mission.hpp"
#include "mrbt/scenario_io.hpp"
#include "mrbt/tree_factory.hpp"
#include "mrbt/world.hpp"

namespace mrbt {

inline constexpr std::uint64_t kNeverFinishes = std::numeric_limits<std::uint64_t>::max();

/// Ticks robot with performance `p` needs for a task of base cost K:
/// ceil(K / p). Performance 0 never finishes.
inline std::uint64_t duration_of(double p, double base_cost) {
  if (!(p > kIncapable)) throw ContractViolation("duration requested for an incapable robot");
  if (p <= 0.0) return kNeverFinishes;
  double d = std::ceil(base_cost / p - 1e-9);
  return d < 1.0 ? 1 : static_cast<std::uint64_t>(d);
}

inline std::uint64_t duration_of(const Scenario& s, std::size_t robot, std::size_t local) {
  const Robot& r = s.robots.at(robot);
  if (!r.capable(local))
    throw ContractViolation("robot '" + r.name + "' cannot perform '" + s.local_tasks.at(local).id + "'");
  return duration_of(r.performance[local], s.local_tasks[local].base_cost);
}

/// 10 x |G| x the longest finite duration of any capable pair.
inline std::uint64_t default_tick_limit(const Scenario& s) {
  std::uint64_t longest = 1;
  for (std::size_t i = 0; i < s.robots.size(); ++i)
    for (std::size_t j = 0; j < s.local_tasks.size(); ++j)
      if (s.robots[i].capable(j)) {
        auto d = duration_of(s, i, j);
        if (d != kNeverFinishes) longest = std::max(longest, d);
      }
  return std::max<std::uint64_t>(10, 10 * std::max<std::size_t>(1, s.global_tasks.size()) * longest);
}

// Trace --------------------------------------------------------------------------

/// Declaration order is the order of events sharing a tick and a robot.
enum class EventKind {
  FaultInjected,
  LocalTaskAborted,
  GlobalTaskActivated,
  AssignmentCommitted,
  LocalTaskTakeover,
  GlobalTaskSucceeded,
  GlobalTaskFailed,
  LocalTaskCancelled,
  LocalTaskStarted,
  LocalTaskSucceeded,
  LocalTaskFailed,
  MissionSucceeded,
  MissionFailed,
};

constexpr std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::FaultInjected: return "fault-injected";
    case EventKind::LocalTaskAborted: return "local-task-aborted";
    case EventKind::GlobalTaskActivated: return "global-task-activated";
    case EventKind::AssignmentCommitted: return "assignment-committed";
    case EventKind::LocalTaskTakeover: return "local-task-takeover";
    case EventKind::GlobalTaskSucceeded: return "global-task-succeeded";
    case EventKind::GlobalTaskFailed: return "global-task-failed";
    case EventKind::LocalTaskCancelled: return "local-task-cancelled";
    case EventKind::LocalTaskStarted: return "local-task-started";
    case EventKind::LocalTaskSucceeded: return "local-task-succeeded";
    case EventKind::LocalTaskFailed: return "local-task-failed";
    case EventKind::MissionSucceeded: return "mission-succeeded";
    case EventKind::MissionFailed: return "mission-failed";
  }
  return "?";
}

struct TraceEvent {
  std::uint64_t tick = 0;
  std::size_t robot = 0;  // 1-based, 0 for fleet-wide events
  EventKind kind = EventKind::FaultInjected;
  nlohmann::ordered_json payload = nlohmann::ordered_json::object();

  std::string str(std::string_view key) const {
    auto it = payload.find(std::string(key));
    return it != payload.end() && it->is_string() ? it->get<std::string>() : std::string();
  }
};

inline nlohmann::ordered_json to_json(const TraceEvent& e, const Scenario& s) {
  nlohmann::ordered_json j;
  j["tick"] = e.tick;
  j["kind"] = std::string(to_string(e.kind));
  j["robot"] = e.robot;
  if (e.robot > 0) j["name"] = s.robots.at(e.robot - 1).name;
  for (const auto& [k, v] : e.payload.items()) j[k] = v;
  return j;
}

inline void write_jsonl(std::ostream& os, const std::vector<TraceEvent>& trace, const Scenario& s) {
  for (const auto& e : trace) os << to_json(e, s).dump() << '\n';
}

inline std::string to_jsonl(const std::vector<TraceEvent>& trace, const Scenario& s) {
  std::ostringstream os;
  write_jsonl(os, trace, s);
  return os.str();
}

// Replicated mission state -----------------------------------------------------------

struct Binding {
  std::size_t local = 0;
  std::size_t global = 0;
  friend bool operator==(const Binding&, const Binding&) = default;
};

/// Fleet-wide broadcast, delivered to every live replica at the start of
/// the next robot phase.
struct Message {
  enum class Kind { Finished, Aborted, FaultApplied };
  Kind kind = Kind::Finished;
  std::size_t robot = 0;
  std::size_t local = 0;
  std::size_t global = 0;
  bool success = false;
  Fault fault;
};

/// One robot's view of the mission. Replicas change only through messages
/// and their own robot's tree ticks.
struct MissionReplica {
  Bounds bounds;
  PerformanceTable performance;
  std::vector<GlobalTaskProgress> progress;       // by global-task index
  std::vector<std::size_t> pending;               // requested, not yet admitted
  std::vector<std::optional<Binding>> binding;    // by robot
  std::map<std::pair<std::size_t, std::size_t>, unsigned> orphans;  // (global, local) -> aborted, unreplaced
  std::optional<Assignment> last;
  bool dirty = false;           // a re-solve is due even without new admissions
  bool finish_seen = false;     // a finish, abort or fault arrived this tick
  Status mission = Status::Running;

  /// Robots currently bound, held on their task.
  std::vector<std::optional<std::size_t>> pins() const {
    std::vector<std::optional<std::size_t>> out(binding.size());
    for (std::size_t i = 0; i < binding.size(); ++i)
      if (binding[i]) out[i] = binding[i]->local;
    return out;
  }

  /// State that must be identical across healthy replicas.
  bool agrees_with(const MissionReplica& o) const {
    auto choice = [](const std::optional<Assignment>& a) {
      return a ? a->choice : std::vector<std::optional<std::size_t>>{};
    };
    return bounds == o.bounds && progress == o.progress && pending == o.pending && binding == o.binding &&
           choice(last) == choice(o.last) && mission == o.mission;
  }
};

struct SimOptions {
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> tick_limit;
};

struct RunResult {
  Status status = Status::Running;
  bool limit_reached = false;
  std::uint64_t ticks = 0;
  std::vector<TraceEvent> trace;
  std::size_t disagreements = 0;         // ticks on which some replica diverged
  std::size_t contract_violations = 0;   // executions without a matching assignment
  WorldState world;
};

class Simulator {
 public:
  Simulator(Scenario scenario, std::vector<ScheduledFault> faults = {}, SimOptions options = {})
      : s_(std::move(scenario)), schedule_(std::move(faults)), options_(options) {
    auto report = validate_assumptions(s_);
    auto blocking = report.blocking();
    if (!blocking.empty()) {
      std::string msg = "scenario '" + s_.name + "' fails validation:";
      for (const auto& v : blocking) msg += "\n  " + v.message;
      throw ConfigError(msg);
    }
    for (std::size_t k = 1; k < schedule_.size(); ++k)
      if (schedule_[k].tick < schedule_[k - 1].tick) throw ConfigError("fault schedule ticks must be non-decreasing");
    Scenario probe = s_;
    for (const auto& f : schedule_) probe = apply_fault(std::move(probe), f.fault);

    world_ = WorldState(s_.world, options_.seed);
    limit_ = options_.tick_limit.value_or(default_tick_limit(s_));
    const std::size_t n = s_.robots.size();
    for (std::size_t i = 0; i < n; ++i) trees_.push_back(build_robot_tree(s_, i));
    MissionReplica base;
    base.bounds = Bounds(s_.local_tasks.size());
    base.performance = s_.performance();
    base.progress.resize(s_.global_tasks.size());
    base.binding.resize(n);
    replicas_.assign(n, base);
    spare_ = base;
    executions_.resize(n);
  }

  const Scenario& scenario() const noexcept { return s_; }

  RunResult run() {
    RunResult out;
    for (tick_ = 1; tick_ <= limit_; ++tick_) {
      events_.clear();
      inject_faults();
      Status mission = tick_robots(out);
      advance_executions();
      if (is_terminal(mission))
        emit(0, mission == Status::Success ? EventKind::MissionSucceeded : EventKind::MissionFailed,
             {{"ticks", tick_}});
      std::stable_sort(events_.begin(), events_.end(), [](const TraceEvent& a, const TraceEvent& b) {
        return std::pair(a.robot, static_cast<int>(a.kind)) < std::pair(b.robot, static_cast<int>(b.kind));
      });
      out.trace.insert(out.trace.end(), events_.begin(), events_.end());
      if (is_terminal(mission)) {
        out.status = mission;
        out.ticks = tick_;
        out.world = world_;
        return out;
      }
    }
    out.status = Status::Running;
    out.limit_reached = true;
    out.ticks = limit_;
    out.world = world_;
    return out;
  }

 private:
  struct Execution {
    std::size_t local = 0;
    std::size_t global = 0;
    std::uint64_t remaining = 0;
  };

  class RobotContext;

  // Step 1 ------------------------------------------------------------------------

  void inject_faults() {
    while (next_fault_ < schedule_.size() && schedule_[next_fault_].tick <= tick_) {
      const Fault& f = schedule_[next_fault_++].fault;
      s_ = apply_fault(std::move(s_), f);
      nlohmann::ordered_json p{{"fault", std::string(to_string(f.kind))}};
      if (f.kind == Fault::Kind::Minor) {
        nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
        for (auto j : f.tasks) tasks.push_back(s_.local_tasks[j].id);
        p["tasks"] = tasks;
      }
      emit(f.robot + 1, EventKind::FaultInjected, std::move(p));
      auto& ex = executions_[f.robot];
      if (ex && s_.robots[f.robot].fault.covers(ex->local)) {
        emit(f.robot + 1, EventKind::LocalTaskAborted, local_payload(ex->local, ex->global));
        inbox_.push_back({Message::Kind::Aborted, f.robot, ex->local, ex->global, false, {}});
        ex.reset();
      }
      inbox_.push_back({Message::Kind::FaultApplied, f.robot, 0, 0, false, f});
    }
  }

  // Step 2 ------------------------------------------------------------------------

  std::optional<std::size_t> reference() const {
    for (std::size_t i = 0; i < s_.robots.size(); ++i)
      if (!s_.robots[i].fault.major) return i;
    return std::nullopt;
  }

  void ingest(MissionReplica& r) const {
    r.finish_seen = false;
    for (const auto& m : inbox_) {
      switch (m.kind) {
        case Message::Kind::FaultApplied:
          if (m.fault.kind == Fault::Kind::Major)
            r.performance.disable_robot(m.robot);
          else
            for (auto j : m.fault.tasks) r.performance.at(m.robot, j) = kIncapable;
          r.dirty = true;
          r.finish_seen = true;
          break;
        case Message::Kind::Aborted:
        case Message::Kind::Finished: {
          if (r.binding[m.robot] == Binding{m.local, m.global}) r.binding[m.robot].reset();
          auto& pr = r.progress[m.global];
          if (pr.phase != GlobalPhase::Active) break;
          auto& tally = pr.tallies[m.local];
          if (m.kind == Message::Kind::Aborted) {
            ++tally.aborted;
            ++r.orphans[{m.global, m.local}];
          } else {
            ++(m.success ? tally.succeeded : tally.failed);
            r.bounds = on_local_task_finished(std::move(r.bounds), m.local, s_.global_tasks[m.global].id);
          }
          r.dirty = true;
          r.finish_seen = true;
          break;
        }
      }
    }
  }

  Status tick_robots(RunResult& out);

  void drop_bindings(MissionReplica& r, std::size_t global) const {
    for (auto& b : r.binding)
      if (b && b->global == global) {
        b.reset();
        r.dirty = true;
      }
    for (auto it = r.orphans.begin(); it != r.orphans.end();)
      it = it->first.first == global ? r.orphans.erase(it) : std::next(it);
  }

  /// Requested or active global tasks the last T_G tick did not reach are
  /// withdrawn, as a halted branch of a classical tree would be.
  void halt_unticked(MissionReplica& r, const std::set<std::size_t>& ticked) const {
    for (std::size_t g = 0; g < r.progress.size(); ++g) {
      auto& pr = r.progress[g];
      if ((pr.phase != GlobalPhase::Requested && pr.phase != GlobalPhase::Active) || ticked.count(g)) continue;
      std::erase(r.pending, g);
      r.bounds = deactivate_global_task(std::move(r.bounds), s_.global_tasks[g].id);
      drop_bindings(r, g);
      pr = GlobalTaskProgress{};
    }
  }

  struct Admission {
    std::vector<std::size_t> admitted;
    bool feasible = false;
  };

  /// Pending requests in request order, each admitted if the program stays
  /// feasible with it and all earlier admissions.
  Admission plan_admissions(const MissionReplica& r) const {
    Admission a;
    AssignmentProblem problem = make_problem(r.bounds, r.performance, r.pins());
    for (auto g : r.pending) {
      auto changes = changes_for(s_.global_tasks[g]);
      if (!check_consistency(problem, changes)) continue;
      for (const auto& c : changes) {
        problem.lower[c.local] += c.lower;
        problem.upper[c.local] += c.upper;
      }
      a.admitted.push_back(g);
    }
    a.feasible = is_feasible(problem);
    return a;
  }

  // Step 3 ------------------------------------------------------------------------

  void advance_executions() {
    for (std::size_t i = 0; i < executions_.size(); ++i) {
      auto& ex = executions_[i];
      if (!ex) continue;
      if (ex->remaining != kNeverFinishes) --ex->remaining;
      if (ex->remaining > 0) continue;
      const GlobalTask& g = s_.global_tasks[ex->global];
      EffectResult r = world_.apply(g.effect, g.id);
      auto p = local_payload(ex->local, ex->global);
      if (!r.ok) p["reason"] = r.reason;
      emit(i + 1, r.ok ? EventKind::LocalTaskSucceeded : EventKind::LocalTaskFailed, std::move(p));
      inbox_.push_back({Message::Kind::Finished, i, ex->local, ex->global, r.ok, {}});
      ex.reset();
    }
  }

  // Helpers -------------------------------------------------------------------------

  void cancel(std::size_t robot) {
    auto& ex = executions_[robot];
    if (!ex) return;
    emit(robot + 1, EventKind::LocalTaskCancelled, local_payload(ex->local, ex->global));
    ex.reset();
  }

  nlohmann::ordered_json local_payload(std::size_t local, std::size_t global) const {
    return {{"local", s_.local_tasks[local].id}, {"global", s_.global_tasks[global].id}};
  }

  void emit(std::size_t robot, EventKind kind, nlohmann::ordered_json payload = nlohmann::ordered_json::object()) {
    events_.push_back({tick_, robot, kind, std::move(payload)});
  }

  Scenario s_;
  std::vector<ScheduledFault> schedule_;
  SimOptions options_;
  std::uint64_t limit_ = 0;
  std::uint64_t tick_ = 0;
  std::size_t next_fault_ = 0;
  WorldState world_;
  std::vector<Node> trees_;
  std::vector<MissionReplica> replicas_;
  MissionReplica spare_;  // drives T_G alone when no robot is left
  std::vector<std::optional<Execution>> executions_;
  std::vector<Message> inbox_;
  std::vector<TraceEvent> events_;
};

/// Leaf callbacks of one robot (or of the fleet-less spare replica when
/// `robot` is empty) for one tick.
class Simulator::RobotContext : public TickContext {
 public:
  RobotContext(Simulator& sim, MissionReplica& replica, std::optional<std::size_t> robot, bool reporter)
      : sim_(sim), r_(replica), robot_(robot), reporter_(reporter) {
    tick = sim.tick_;
  }

  std::set<std::size_t> ticked;  // global tasks reached this tick
  std::size_t contract_violations = 0;

  bool check(const Node& c) const override {
    const auto& name = c.name;
    if (name == leaf::kLocalTaskFinished) return r_.finish_seen;
    if (name == leaf::kNewGlobalTaskExecuted) return !r_.pending.empty();
    if (name == leaf::kCheckConsistency) {
      Admission a = sim_.plan_admissions(r_);
      return a.feasible && (!a.admitted.empty() || r_.dirty);
    }
    if (name == leaf::kAssignedTo) {
      const std::size_t j = sim_.s_.require_local(c.arg());
      return robot_ && r_.binding[*robot_] && r_.binding[*robot_]->local == j;
    }
    return sim_.world_.check(c);
  }

  Status act(const Node& a) override {
    const auto& name = a.name;
    if (name == leaf::kIdle) return Status::Success;
    if (name == kPerformGlobalTask) return global_task(sim_.s_.require_global(a.arg()));
    if (name == leaf::kAssignAgents) return assign_agents();
    if (name == leaf::kPerformLocalTask) return local_task(sim_.s_.require_local(a.arg()));
    throw ConfigError("unknown action '" + name + "'" + (a.line ? " at line " + std::to_string(a.line) : ""));
  }

 private:
  void emit(EventKind kind, nlohmann::ordered_json payload) {
    if (reporter_) sim_.emit(0, kind, std::move(payload));
  }

  Status global_task(std::size_t g) {
    ticked.insert(g);
    auto& pr = r_.progress[g];
    const GlobalTask& task = sim_.s_.global_tasks[g];
    switch (pr.phase) {
      case GlobalPhase::Idle:
        pr.phase = GlobalPhase::Requested;
        r_.pending.push_back(g);
        return Status::Running;
      case GlobalPhase::Requested:
        return Status::Running;
      case GlobalPhase::Active: {
        Status st = evaluate_global_task(task, pr);
        if (!is_terminal(st)) return st;
        pr.phase = st == Status::Success ? GlobalPhase::Succeeded : GlobalPhase::Failed;
        r_.bounds = deactivate_global_task(std::move(r_.bounds), task.id);
        sim_.drop_bindings(r_, g);
        emit(st == Status::Success ? EventKind::GlobalTaskSucceeded : EventKind::GlobalTaskFailed,
             {{"global", task.id}});
        return st;
      }
      case GlobalPhase::Succeeded:
        return Status::Success;
      case GlobalPhase::Failed:
        return Status::Failure;
    }
    return Status::Failure;
  }

  Status assign_agents() {
    const auto& s = sim_.s_;
    Admission adm = sim_.plan_admissions(r_);
    for (auto g : adm.admitted) {
      r_.bounds = activate_global_task(std::move(r_.bounds), s.global_tasks[g]);
      r_.progress[g].phase = GlobalPhase::Active;
      std::erase(r_.pending, g);
      nlohmann::ordered_json bounds = nlohmann::ordered_json::object();
      for (const auto& d : s.global_tasks[g].demands)
        bounds[s.local_tasks[d.local].id] = {d.min_robots, d.max_robots};
      emit(EventKind::GlobalTaskActivated, {{"global", s.global_tasks[g].id}, {"bounds", bounds}});
    }
    auto solution = solve(make_problem(r_.bounds, r_.performance, r_.pins()));
    if (!solution) return Status::Failure;
    r_.last = solution;
    r_.dirty = false;
    bind(*solution);

    nlohmann::ordered_json assigned = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < solution->choice.size(); ++i)
      if (solution->choice[i]) assigned[s.robots[i].name] = s.local_tasks[*solution->choice[i]].id;
    emit(EventKind::AssignmentCommitted, {{"assignment", assigned}, {"objective", solution->objective}});
    return Status::Success;
  }

  /// Newly assigned robots join active contributions: every contribution
  /// is first filled up to its lower bound, then up to its upper bound, in
  /// activation order, robots in index order.
  void bind(const Assignment& a) {
    const auto& s = sim_.s_;
    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < a.choice.size(); ++i)
      if (a.choice[i] && !r_.binding[i]) fresh.push_back(i);

    auto bound_to = [&](std::size_t g, std::size_t l) {
      return static_cast<unsigned>(std::count(r_.binding.begin(), r_.binding.end(), std::optional<Binding>(Binding{l, g})));
    };
    for (int pass = 0; pass < 2; ++pass) {
      for (auto& i : fresh) {
        if (i == kTaken) continue;
        const std::size_t l = *a.choice[i];
        for (const auto& c : r_.bounds.contributions()) {
          const std::size_t g = s.require_global(c.global);
          auto slot = std::find_if(c.slots.begin(), c.slots.end(), [&](const Bounds::Slot& x) { return x.local == l; });
          if (slot == c.slots.end()) continue;
          if (bound_to(g, l) >= (pass == 0 ? slot->lower : slot->upper)) continue;
          r_.binding[i] = Binding{l, g};
          ++r_.progress[g].tallies[l].assigned;
          if (auto it = r_.orphans.find({g, l}); it != r_.orphans.end() && it->second > 0) {
            --it->second;
            emit(EventKind::LocalTaskTakeover,
                 {{"by", s.robots[i].name}, {"local", s.local_tasks[l].id}, {"global", c.global}});
          }
          i = kTaken;
          break;
        }
      }
    }
    for (auto i : fresh)
      if (i != kTaken) throw ContractViolation("assigned robot found no open slot");
  }

  Status local_task(std::size_t l) {
    if (!robot_) return Status::Failure;
    const std::size_t i = *robot_;
    const auto& b = r_.binding[i];
    if (!b || b->local != l) return Status::Failure;
    auto& ex = sim_.executions_[i];
    if (ex && ex->local == b->local && ex->global == b->global) return Status::Running;
    if (ex) sim_.cancel(i);
    if (!r_.last || r_.last->choice.at(i) != l) ++contract_violations;
    const std::uint64_t d = duration_of(sim_.s_, i, l);
    ex = Execution{l, b->global, d};
    auto p = sim_.local_payload(l, b->global);
    p["duration"] = d == kNeverFinishes ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(d);
    sim_.emit(i + 1, EventKind::LocalTaskStarted, std::move(p));
    return Status::Running;
  }

  static constexpr std::size_t kTaken = std::numeric_limits<std::size_t>::max();

  Simulator& sim_;
  MissionReplica& r_;
  std::optional<std::size_t> robot_;
  bool reporter_;
};

inline Status Simulator::tick_robots(RunResult& out) {
  auto ref = reference();
  for (std::size_t i = 0; i < replicas_.size(); ++i)
    if (!s_.robots[i].fault.major) ingest(replicas_[i]);
  if (!ref) ingest(spare_);
  inbox_.clear();

  Status mission = Status::Running;
  if (!ref) {
    RobotContext ctx(*this, spare_, std::nullopt, true);
    mission = tick(s_.mission, ctx);
    halt_unticked(spare_, ctx.ticked);
    spare_.mission = mission;
    return mission;
  }

  for (std::size_t i = 0; i < replicas_.size(); ++i) {
    if (s_.robots[i].fault.major) continue;
    auto& replica = replicas_[i];
    RobotContext ctx(*this, replica, i, i == *ref);
    const Node* tg = &trees_[i].children[1];
    Status tg_status = Status::Running;
    tick(trees_[i], ctx, [&](const Node& n, Status st) {
      if (&n == tg) tg_status = st;
    });
    halt_unticked(replica, ctx.ticked);
    replica.mission = tg_status;
    out.contract_violations += ctx.contract_violations;
    // A robot whose binding went away stops what it was doing.
    auto& ex = executions_[i];
    if (ex && replica.binding[i] != Binding{ex->local, ex->global}) cancel(i);
    if (i == *ref) mission = tg_status;
  }

  for (std::size_t i = 0; i < replicas_.size(); ++i)
    if (!s_.robots[i].fault.major && !replicas_[i].agrees_with(replicas_[*ref])) {
      ++out.disagreements;
      break;
    }
  spare_ = replicas_[*ref];
  return mission;
}

}  // namespace mrbt

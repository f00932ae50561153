// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"

using namespace mrbt;

namespace {

std::string scenario_path(const std::string& f) { return std::string(MRBT_SCENARIOS) + "/" + f; }

struct Check {
  std::ostringstream notes;
  bool ok = true;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes << "\n    failed: " << what;
    }
  }
  void note(const std::string& what) { notes << "\n    " << what; }
};

int failures = 0;

template <class F>
void criterion(const std::string& name, double budget_s, F&& body) {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0) {
    std::ostringstream b;
    b << "runtime " << secs << " s within " << budget_s << " s";
    c.expect(secs < budget_s, b.str());
  }
  char line[64];
  std::snprintf(line, sizeof line, " (%.3f s)", secs);
  std::cout << (c.ok ? "PASS " : "FAIL ") << name << line << c.notes.str() << "\n";
  failures += !c.ok;
}

struct Exec {
  std::size_t robot = 0;  // 0-based
  std::string local, global;
  std::uint64_t start = 0, end = 0, duration = 0;
  bool done = false;
};

std::vector<Exec> executions(const RunResult& r) {
  std::vector<Exec> out;
  std::map<std::size_t, std::size_t> open;
  for (const auto& e : r.trace) {
    if (e.robot == 0) continue;
    if (e.kind == EventKind::LocalTaskStarted) {
      open[e.robot] = out.size();
      Exec x{e.robot - 1, e.str("local"), e.str("global"), e.tick, 0, 0, false};
      if (e.payload["duration"].is_number()) x.duration = e.payload["duration"].get<std::uint64_t>();
      out.push_back(x);
    } else if (e.kind == EventKind::LocalTaskSucceeded || e.kind == EventKind::LocalTaskFailed ||
               e.kind == EventKind::LocalTaskCancelled || e.kind == EventKind::LocalTaskAborted) {
      if (auto it = open.find(e.robot); it != open.end()) {
        out[it->second].end = e.tick;
        out[it->second].done = e.kind == EventKind::LocalTaskSucceeded;
        open.erase(it);
      }
    }
  }
  return out;
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

std::set<std::string> succeeded_globals(const RunResult& r) {
  std::set<std::string> out;
  for (const auto& e : r.trace)
    if (e.kind == EventKind::GlobalTaskSucceeded) out.insert(e.str("global"));
  return out;
}

void flag_mapping(const Node& src, const Node& dst, Check& c) {
  if (src.parallelizable) {
    std::size_t m = src.kind == NodeKind::Sequence ? src.children.size() : 1;
    c.expect(dst.kind == NodeKind::Parallel && dst.threshold == m,
             "flagged " + std::string(to_string(src.kind)) + " became Parallel(M=" + std::to_string(m) + ")");
  } else if (src.is_control()) {
    c.expect(dst.kind == src.kind, "unflagged node keeps its kind");
  }
  if (src.children.size() != dst.children.size()) {
    c.expect(false, "child counts agree");
    return;
  }
  for (std::size_t k = 0; k < src.children.size(); ++k) flag_mapping(src.children[k], dst.children[k], c);
}

Scenario translated(Scenario fleet, bool parallelize) {
  Node single = load_tree(scenario_path("repair_single.tree"));
  return with_translation(std::move(fleet), translate(single, fleet, parallelize));
}

}  // namespace

int main() {
  std::cout.setf(std::ios::fixed);
  std::cout.precision(3);

  criterion("solver-exactness: 500 random instances up to 4x4 match enumeration", 10.0, [](Check& c) {
    std::mt19937_64 rng(20240501);
    std::size_t mismatches = 0, feasible = 0, with_incapable = 0;
    for (int k = 0; k < 500; ++k) {
      auto p = oracle::random_problem(rng, 4, 4, k % 2 == 0);
      bool incapable = false;
      for (std::size_t i = 0; i < p.robots(); ++i)
        for (std::size_t j = 0; j < p.tasks(); ++j) incapable |= p.performance(i, j) == kIncapable;
      with_incapable += incapable;
      auto got = solve(p);
      auto want = oracle::brute_force_solve(p);
      if (got.has_value() != want.has_value() || (got && std::abs(got->objective - want->objective) > 1e-9) ||
          is_feasible(p) != want.has_value())
        ++mismatches;
      feasible += want.has_value();
    }
    c.note("mismatches " + std::to_string(mismatches) + ", feasible " + std::to_string(feasible) +
           "/500, with incapable entries " + std::to_string(with_incapable));
    c.expect(mismatches == 0, "zero mismatches");
    c.expect(feasible > 0 && feasible < 500, "both verdicts exercised");
  });

  criterion("bt-semantics: selector/sequence/parallel over {S,F,R}^N, N<=4, all M", 0, [](Check& c) {
    std::size_t cases = 0, mismatches = 0;
    for (std::size_t n = 1; n <= 4; ++n)
      for (const auto& tuple : oracle::status_tuples(n)) {
        auto check = [&](const Node& tree, Status want) {
          oracle::ScriptedContext ctx(tuple);
          ++cases;
          mismatches += tick(tree, ctx) != want;
        };
        check(selector(oracle::scripted_leaves(n)), oracle::selector(tuple));
        check(sequence(oracle::scripted_leaves(n)), oracle::sequence(tuple));
        for (std::size_t m = 1; m <= n; ++m) check(parallel(oracle::scripted_leaves(n), m), oracle::parallel(tuple, m));
      }
    c.note(std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches");
    c.expect(mismatches == 0, "zero mismatches");
  });

  criterion("repair-replay: parts 2 and 4 broken", 1.0, [](Check& c) {
    auto s = load_scenario(scenario_path("repair.scn"));
    auto r = Simulator(s).run();
    c.expect(r.status == Status::Success, "mission succeeds");
    c.note("mission " + std::string(to_string(r.status)) + " at tick " + std::to_string(r.ticks));
    auto ex = executions(r);
    auto type = [&](const Exec& x) { return s.robots[x.robot].type; };

    std::set<std::string> screwdrivers;
    for (const auto& x : ex)
      if (x.global == "RemoveScrews" && x.local == "UseScrewdriver") screwdrivers.insert(s.robots[x.robot].name);
    c.expect(screwdrivers == std::set<std::string>{"C5", "C6"}, "both type-C robots on UseScrewdriver");

    std::vector<Exec> diag;
    for (const auto& x : ex)
      if (starts_with(x.global, "DiagnosePart")) diag.push_back(x);
    std::size_t peak = 0;
    for (std::uint64_t t = 1; t <= r.ticks; ++t) {
      std::size_t active = 0;
      for (const auto& x : diag) active += x.start <= t && t <= x.end;
      peak = std::max(peak, active);
    }
    c.note("peak concurrent diagnoses " + std::to_string(peak));
    c.expect(peak == 4, "exactly 4 diagnoses run at once");
    std::uint64_t first_start = ~0ull, first_finish = ~0ull, part5 = 0;
    for (const auto& x : diag) {
      if (x.global == "DiagnosePart5") {
        part5 = x.start;
        continue;
      }
      first_start = std::min(first_start, x.start);
      first_finish = std::min(first_finish, x.end);
    }
    c.expect(part5 > first_finish, "DiagnosePart5 starts only after a diagnosis finishes");
    std::uint64_t part5_active = 0;
    for (const auto& e : r.trace)
      if (e.kind == EventKind::GlobalTaskActivated && e.str("global") == "DiagnosePart5") part5_active = e.tick;
    c.expect(part5_active > first_start, "DiagnosePart5 is not admitted at the first diagnosis tick");
    for (const auto& x : diag) {
      std::uint64_t want = type(x) == "A" ? 1 : 3;
      c.expect(x.duration == want && x.end - x.start + 1 == want,
               s.robots[x.robot].name + " diagnosis takes " + std::to_string(want) + " tick(s)");
    }
    for (const auto& x : ex) {
      if (x.local == "ReplaceHW") c.expect(type(x) == "A", "HW replacement by a type-A robot");
      if (x.local == "Solder") c.expect(type(x) == "B", "soldering by a type-B robot");
    }
  });

  criterion("fault-takeover: major fault on a type-A robot anywhere in the fix phase", 0, [](Check& c) {
    auto s = load_scenario(scenario_path("repair.scn"));
    auto clean = Simulator(s).run();
    std::uint64_t begin = ~0ull, end = 0;
    for (const auto& e : clean.trace) {
      const std::string g = e.str("global");
      bool fix = starts_with(g, "FixHW") || starts_with(g, "FixWires") || starts_with(g, "SolderPart");
      if (fix && e.kind == EventKind::GlobalTaskActivated) begin = std::min(begin, e.tick);
      if (fix && e.kind == EventKind::GlobalTaskSucceeded) end = std::max(end, e.tick);
    }
    c.note("fix phase ticks " + std::to_string(begin) + "-" + std::to_string(end));
    std::size_t runs = 0, takeovers = 0, type_b = 0;
    for (const char* name : {"A1", "A2"}) {
      const std::size_t a = *s.robot_index(name);
      for (std::uint64_t t = begin; t <= end; ++t) {
        ++runs;
        auto r = Simulator(s, {{t, Fault::major(a)}}).run();
        const std::string at = std::string(name) + " at tick " + std::to_string(t);
        c.expect(r.status == Status::Success, "mission succeeds with " + at);
        c.expect(r.disagreements == 0, "replicas agree with " + at);
        // A takeover is owed when the faulted robot was the only one on its task.
        auto ex = executions(r);
        bool orphaned = false, taken = false;
        for (const auto& e : r.trace) {
          if (e.kind == EventKind::LocalTaskAborted && e.robot == a + 1) {
            orphaned = std::none_of(ex.begin(), ex.end(), [&](const Exec& x) {
              return x.robot != a && x.global == e.str("global") && x.start < e.tick && x.end >= e.tick;
            });
            if (!orphaned) c.note(at + ": " + e.str("global") + " still covered by a co-assigned robot");
          }
          if (e.kind == EventKind::LocalTaskTakeover) {
            const auto& by = s.robots[*s.robot_index(e.payload["by"].get<std::string>())];
            taken = true;
            type_b += by.type == "B";
            if (by.type != "B") c.note(at + ": " + by.name + " (type " + by.type + ") took over " + e.str("global"));
          }
        }
        if (orphaned) c.expect(taken, "orphaned work taken over with " + at);
        takeovers += taken;
      }
    }
    auto canned = Simulator(s, load_faults(scenario_path("repair_major_a1.faults"), s)).run();
    bool canned_takeover = std::any_of(canned.trace.begin(), canned.trace.end(), [&](const TraceEvent& e) {
      return e.kind == EventKind::LocalTaskTakeover &&
             s.robots[*s.robot_index(e.payload["by"].get<std::string>())].type == "B";
    });
    c.expect(canned.status == Status::Success && canned_takeover,
             "repair_major_a1.faults: success with a type-B takeover");
    c.note(std::to_string(runs) + " injections, " + std::to_string(takeovers) + " with a takeover, " +
           std::to_string(type_b) + " type-B takeover events");
    c.expect(type_b > 0, "type-B takeovers occur in the sweep");
  });

  criterion("tolerance-analysis: repair scenario", 10.0, [](Check& c) {
    auto s = load_scenario(scenario_path("repair.scn"));
    auto report = analyze(s);
    c.expect(!report.weak.tolerant, "not weakly fault tolerant");
    bool frame = !report.weak.violations.empty();
    for (const auto& v : report.weak.violations) frame &= s.local_tasks[v.local].id == "MoveFrame";
    c.expect(frame, "weak check cites MoveFrame");
    c.expect(format_report(report, s).find("Move Frame") != std::string::npos ||
                 format_report(report, s).find("MoveFrame") != std::string::npos,
             "report names Move Frame");
    c.expect(!report.strong.tolerant, "not strongly fault tolerant");

    c.expect(report.max_major.count == 3, "max major faults 3");
    std::multiset<std::string> types;
    for (const auto& f : report.max_major.witness) types.insert(s.robots[f.robot].type);
    c.expect(types == std::multiset<std::string>{"A", "A", "B"}, "witness is both type-A robots and one type-B");

    auto feasible = [](const AssignmentProblem& p) { return is_feasible(p); };
    const std::size_t brute = oracle::max_minor_by_subsets(s, feasible);
    c.note("max minor faults: search " + std::to_string(report.max_minor.count) + ", subset enumeration " +
           std::to_string(brute) + ", reference figure 11");
    if (brute != 11) c.note("discrepancy with the reference figure: " + std::to_string(brute) + " vs 11");
    c.expect(report.max_minor.count == brute, "search agrees with subset enumeration");
    c.expect(brute >= 10, "at least 10 minor faults tolerated");
    c.expect(brute == 11, "pinned value 11");
  });

  criterion("explore: areas A and B with one and two robots", 0, [](Check& c) {
    auto one = load_scenario(scenario_path("explore_one_robot.scn"));
    auto two = load_scenario(scenario_path("explore_two_robots.scn"));
    c.expect(one.mission == two.mission, "identical mission tree");
    c.expect(format_tree(build_global_tree(one)) == format_tree(build_global_tree(two)), "identical T_G");
    auto r1 = Simulator(one).run();
    auto r2 = Simulator(two).run();
    c.expect(r1.status == Status::Success && r2.status == Status::Success, "both runs succeed");
    auto interval = [](const std::vector<Exec>& ex, const std::string& g) {
      for (const auto& x : ex)
        if (x.global == g) return std::pair(x.start, x.end);
      return std::pair<std::uint64_t, std::uint64_t>(0, 0);
    };
    auto e1 = executions(r1), e2 = executions(r2);
    auto a1 = interval(e1, "ExploreA"), b1 = interval(e1, "ExploreB");
    auto a2 = interval(e2, "ExploreA"), b2 = interval(e2, "ExploreB");
    c.note("one robot: A " + std::to_string(a1.first) + "-" + std::to_string(a1.second) + ", B " +
           std::to_string(b1.first) + "-" + std::to_string(b1.second));
    c.note("two robots: A " + std::to_string(a2.first) + "-" + std::to_string(a2.second) + ", B " +
           std::to_string(b2.first) + "-" + std::to_string(b2.second));
    c.expect(a1.first > 0 && b1.first > 0 && a1.second < b1.first, "one robot: A ends before B starts");
    c.expect(a2.first > 0 && b2.first > 0 && a2.first <= b2.second && b2.first <= a2.second,
             "two robots: intervals overlap");
  });

  criterion("translation: annotated single-robot repair tree", 0, [](Check& c) {
    auto fleet = load_scenario(scenario_path("repair_single.scn"));
    Node single = load_tree(scenario_path("repair_single.tree"));
    auto tr = translate(single, fleet);
    std::multiset<std::string> src, dst;
    for_each_node(single, [&](const Node& n) {
      if (n.kind == NodeKind::Action) src.insert(n.name);
      if (n.kind == NodeKind::Condition) src.insert("?" + format_tree(n));
    });
    for_each_node(tr.mission, [&](const Node& n) {
      if (is_global_task_leaf(n)) {
        for (const auto& g : tr.global_tasks)
          if (g.id == n.arg()) dst.insert(fleet.local_tasks[g.demands.at(0).local].id);
      } else if (n.kind == NodeKind::Condition) {
        dst.insert("?" + format_tree(n));
      }
    });
    c.expect(src == dst, "leaf multiset preserved");
    c.note(std::to_string(src.size()) + " leaves");
    flag_mapping(single, tr.mission, c);

    auto par = Simulator(translated(fleet, true)).run();
    auto seq = Simulator(translated(fleet, false)).run();
    c.expect(par.status == Status::Success && seq.status == Status::Success, "both one-robot runs succeed");
    c.note("translated " + std::to_string(par.ticks) + " ticks, sequential " + std::to_string(seq.ticks) + " ticks");
    c.expect(succeeded_globals(par) == succeeded_globals(seq), "same global tasks completed");
  });

  criterion("determinism: byte-identical traces, replicas always agree", 0, [](Check& c) {
    auto repair = load_scenario(scenario_path("repair.scn"));
    auto fleet = load_scenario(scenario_path("repair_single.scn"));
    struct Case {
      std::string name;
      Scenario scenario;
      std::vector<ScheduledFault> faults;
    };
    std::vector<Case> cases = {
        {"repair", repair, {}},
        {"repair with A1 major", repair, load_faults(scenario_path("repair_major_a1.faults"), repair)},
        {"explore one robot", load_scenario(scenario_path("explore_one_robot.scn")), {}},
        {"explore two robots", load_scenario(scenario_path("explore_two_robots.scn")), {}},
        {"translated repair", translated(fleet, true), {}},
        {"sequential repair", translated(fleet, false), {}},
    };
    for (const auto& k : cases) {
      auto a = Simulator(k.scenario, k.faults).run();
      auto b = Simulator(k.scenario, k.faults).run();
      c.expect(to_jsonl(a.trace, k.scenario) == to_jsonl(b.trace, k.scenario), k.name + ": identical traces");
      c.expect(a.disagreements == 0 && b.disagreements == 0, k.name + ": replicas agree");
      c.expect(a.contract_violations == 0, k.name + ": no unassigned executions");
    }
  });

  std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " failing criteria\n";
  return failures == 0 ? 0 : 1;
}

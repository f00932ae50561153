#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace mrbt;

namespace {

std::string scenario_path(const std::string& f) { return std::string(MRBT_SCENARIOS) + "/" + f; }

struct Run {
  std::string robot, local, global;
  std::uint64_t start = 0, end = 0;
  EventKind how = EventKind::LocalTaskStarted;  // what ended it
};

std::vector<Run> executions(const RunResult& r, const Scenario& s) {
  std::vector<Run> out;
  std::map<std::size_t, std::size_t> open;
  for (const auto& e : r.trace) {
    if (e.kind == EventKind::LocalTaskStarted) {
      open[e.robot] = out.size();
      out.push_back({s.robots[e.robot - 1].name, e.str("local"), e.str("global"), e.tick, 0});
    } else if (e.kind == EventKind::LocalTaskSucceeded || e.kind == EventKind::LocalTaskFailed ||
               e.kind == EventKind::LocalTaskCancelled || e.kind == EventKind::LocalTaskAborted) {
      auto it = open.find(e.robot);
      if (it == open.end()) continue;
      out[it->second].end = e.tick;
      out[it->second].how = e.kind;
      open.erase(it);
    }
  }
  return out;
}

std::uint64_t first(const RunResult& r, EventKind k, const std::string& global) {
  for (const auto& e : r.trace)
    if (e.kind == k && e.str("global") == global) return e.tick;
  return 0;
}

// Invariants every trace must satisfy.
void check_trace(const RunResult& r, const Scenario& s) {
  EXPECT_EQ(r.disagreements, 0u);
  EXPECT_EQ(r.contract_violations, 0u);
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    const auto& a = r.trace[k - 1];
    const auto& b = r.trace[k];
    EXPECT_LE(std::tuple(a.tick, a.robot, int(a.kind)), std::tuple(b.tick, b.robot, int(b.kind))) << k;
  }
  // A robot only starts a local task it is capable of and was assigned by
  // the latest committed assignment.
  std::map<std::string, std::string> assignment;
  Scenario live = s;
  for (const auto& e : r.trace) {
    if (e.kind == EventKind::FaultInjected) {
      // capability loss is checked against the scenario before the fault
    }
    if (e.kind == EventKind::AssignmentCommitted) {
      assignment.clear();
      for (const auto& [robot, local] : e.payload["assignment"].items()) assignment[robot] = local.get<std::string>();
    }
    if (e.kind == EventKind::LocalTaskStarted) {
      const auto& robot = s.robots[e.robot - 1];
      EXPECT_TRUE(robot.has_capability(s.require_local(e.str("local"))));
      EXPECT_EQ(assignment[robot.name], e.str("local")) << "tick " << e.tick;
    }
  }
}

// No diagnosis before the cover is off, no repair before a broken verdict.
void check_world_order(const RunResult& r, const Scenario& s) {
  const auto runs = executions(r, s);
  const std::uint64_t cover_off = first(r, EventKind::GlobalTaskSucceeded, "RemoveCover");
  for (const auto& x : runs) {
    if (x.global.rfind("DiagnosePart", 0) == 0) {
      EXPECT_GT(x.start, cover_off);
    }
    for (const char* prefix : {"FixHW", "FixWires", "SolderPart"}) {
      if (x.global.rfind(prefix, 0) != 0) continue;
      std::string k = x.global.substr(std::string(prefix).size());
      EXPECT_GT(x.start, first(r, EventKind::GlobalTaskSucceeded, "DiagnosePart" + k));
      EXPECT_TRUE(r.world.part(std::stoul(k)).faulty);
    }
  }
}

Scenario sweepers() {
  return parse_scenario(
      "scenario sweepers\nlocal Sweep\nlocal Lift\n"
      "robot R1 Sweep=1 Lift=1\nrobot R2 Sweep=1 Lift=1\nrobot R3 Sweep=1 Lift=1.5\n"
      "global G1 needs Sweep 1 1 effect fact g1\nglobal G2 needs Lift 1 2 effect fact g2\n"
      "global G3 needs Sweep 1 1\nglobal G4 needs Lift 1 1\n"
      "tree (root (sequence (task G1) (task G2) (parallel 2 (task G3) (task G4))))\n",
      "sweepers");
}

}  // namespace

TEST(Simulator, Durations) {
  EXPECT_EQ(duration_of(3.0, 3.0), 1u);
  EXPECT_EQ(duration_of(1.0, 3.0), 3u);
  EXPECT_EQ(duration_of(1.5, 3.0), 2u);
  EXPECT_EQ(duration_of(2.0, 3.0), 2u);
  EXPECT_EQ(duration_of(0.0, 3.0), kNeverFinishes);
  auto s = load_scenario(scenario_path("repair.scn"));
  EXPECT_THROW(duration_of(s, 4, s.require_local("Solder")), ContractViolation);
}

TEST(Simulator, RepairTimeline) {
  auto s = load_scenario(scenario_path("repair.scn"));
  auto r = Simulator(s).run();
  ASSERT_EQ(r.status, Status::Success);
  EXPECT_EQ(r.ticks, 31u);
  check_trace(r, s);
  check_world_order(r, s);

  std::vector<std::string> got;
  for (const auto& x : executions(r, s))
    got.push_back(x.robot + " " + x.global + " " + std::to_string(x.start) + "-" + std::to_string(x.end) +
                  (x.how == EventKind::LocalTaskCancelled ? " cancelled" : ""));
  const std::vector<std::string> want = {
      "C5 RemoveScrews 2-4",      "C6 RemoveScrews 2-4",      "C5 RemoveCover 6-8",
      "C6 RemoveCover 6-8",       "A1 DiagnosePart1 10-10",   "A2 DiagnosePart2 10-10",
      "B3 DiagnosePart3 10-12",   "B4 DiagnosePart4 10-12",   "A1 DiagnosePart5 11-11",
      "A1 FixHW2 14-15",          "A2 FixHW4 14-15",          "A1 FixWires2 17-18",
      "A2 FixWires4 17-18",       "B3 FixWires2 17-19 cancelled", "B4 FixWires4 17-19 cancelled",
      "B3 SolderPart2 20-22",     "B4 SolderPart4 20-22",     "C5 PlaceCover 24-26",
      "C6 PlaceCover 24-26",      "C5 PlaceScrews 28-30",     "C6 PlaceScrews 28-30"};
  EXPECT_EQ(got, want);
  EXPECT_EQ(r.world.cover(), CoverState::Screwed);
  EXPECT_EQ(r.world.part(2).status, PartStatus::Fixed);
  EXPECT_EQ(r.world.part(4).status, PartStatus::Fixed);
  EXPECT_EQ(r.world.part(1).status, PartStatus::Ok);
  EXPECT_EQ(r.trace.back().kind, EventKind::MissionSucceeded);
}

TEST(Simulator, NominalVehicleNeedsNoWork) {
  auto s = load_scenario(scenario_path("repair.scn"));
  s.world.nominal = true;
  auto r = Simulator(s).run();
  EXPECT_EQ(r.status, Status::Success);
  EXPECT_EQ(r.ticks, 1u);
}

TEST(Simulator, RandomBrokenPartsAreRepaired) {
  auto s = load_scenario(scenario_path("repair.scn"));
  s.world.random_parts = true;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    SimOptions o;
    o.seed = seed;
    auto r = Simulator(s, {}, o).run();
    ASSERT_EQ(r.status, Status::Success) << seed;
    check_trace(r, s);
    check_world_order(r, s);
    for (std::size_t k = 1; k <= 5; ++k)
      EXPECT_EQ(r.world.part(k).status, r.world.part(k).faulty ? PartStatus::Fixed : PartStatus::Ok);
  }
}

TEST(Simulator, RunsAreByteIdentical) {
  auto s = load_scenario(scenario_path("repair.scn"));
  auto faults = load_faults(scenario_path("repair_major_a1.faults"), s);
  EXPECT_EQ(to_jsonl(Simulator(s).run().trace, s), to_jsonl(Simulator(s).run().trace, s));
  EXPECT_EQ(to_jsonl(Simulator(s, faults).run().trace, s), to_jsonl(Simulator(s, faults).run().trace, s));
}

TEST(Simulator, ExploreWithOneAndTwoRobots) {
  auto one = load_scenario(scenario_path("explore_one_robot.scn"));
  auto two = load_scenario(scenario_path("explore_two_robots.scn"));
  EXPECT_EQ(one.mission, two.mission);
  auto r1 = Simulator(one).run();
  auto r2 = Simulator(two).run();
  ASSERT_EQ(r1.status, Status::Success);
  ASSERT_EQ(r2.status, Status::Success);
  auto e1 = executions(r1, one);
  auto e2 = executions(r2, two);
  ASSERT_EQ(e1.size(), 2u);
  ASSERT_EQ(e2.size(), 2u);
  EXPECT_EQ(e1[0].global, "ExploreA");
  EXPECT_LT(e1[0].end, e1[1].start);
  EXPECT_EQ(e1[0].start, 2u);
  EXPECT_EQ(e1[1].start, 5u);
  EXPECT_EQ(e2[0].start, e2[1].start);
  EXPECT_NE(e2[0].robot, e2[1].robot);
  check_trace(r1, one);
  check_trace(r2, two);
}

TEST(Simulator, TypeBTakesOverFromBrokenTypeA) {
  auto s = load_scenario(scenario_path("repair.scn"));
  auto faults = load_faults(scenario_path("repair_major_a1.faults"), s);
  auto r = Simulator(s, faults).run();
  ASSERT_EQ(r.status, Status::Success);
  check_trace(r, s);
  check_world_order(r, s);
  bool takeover = false;
  for (const auto& e : r.trace)
    if (e.kind == EventKind::LocalTaskTakeover) {
      takeover = true;
      EXPECT_EQ(s.robots[*s.robot_index(e.payload["by"].get<std::string>())].type, "B");
    }
  EXPECT_TRUE(takeover);
  for (const auto& x : executions(r, s))
    if (x.robot == "A1") {
      EXPECT_LE(x.start, 15u);
    }
}

TEST(Simulator, AbortedRobotsAreNotCountedAsFailures) {
  auto s = load_scenario(scenario_path("repair.scn"));
  std::vector<ScheduledFault> f{{11, Fault::major(2)}};  // B3 mid-diagnosis
  auto r = Simulator(s, f).run();
  ASSERT_EQ(r.status, Status::Success);
  check_trace(r, s);
  EXPECT_EQ(first(r, EventKind::GlobalTaskFailed, "DiagnosePart3"), 0u);
}

TEST(Simulator, SingleMinorFaultsAreAbsorbedWhenWeaklyTolerant) {
  auto s = sweepers();
  ASSERT_TRUE(is_weakly_fault_tolerant(s).tolerant);
  auto clean = Simulator(s).run();
  ASSERT_EQ(clean.status, Status::Success);
  for (std::size_t i = 0; i < s.robots.size(); ++i)
    for (auto l : s.robots[i].capabilities())
      for (std::uint64_t t = 1; t <= clean.ticks; ++t) {
        std::vector<ScheduledFault> f{{t, Fault::minor(i, {l})}};
        auto r = Simulator(s, f).run();
        EXPECT_EQ(r.status, Status::Success) << s.robots[i].name << " " << s.local_tasks[l].id << " @" << t;
        check_trace(r, s);
      }
}

TEST(Simulator, RandomWeaklyTolerantMissionsSurviveAnySingleMinorFault) {
  std::mt19937_64 rng(71);
  int checked = 0;
  for (int k = 0; k < 60 && checked < 15; ++k) {
    auto s = oracle::random_scenario(rng);
    if (!validate_assumptions(s).blocking().empty() || !tolerates(s) || !is_weakly_fault_tolerant(s).tolerant)
      continue;
    ++checked;
    auto clean = Simulator(s).run();
    ASSERT_EQ(clean.status, Status::Success);
    for (std::size_t i = 0; i < s.robots.size(); ++i)
      for (auto l : s.robots[i].capabilities())
        for (std::uint64_t t = 1; t <= clean.ticks; ++t) {
          auto r = Simulator(s, {{t, Fault::minor(i, {l})}}).run();
          EXPECT_EQ(r.status, Status::Success) << format_tree(s.mission) << s.robots[i].name << " L" << l << " @" << t;
        }
  }
  EXPECT_GT(checked, 3);
}

TEST(Simulator, FeasibleMissionsFinishWithinTheDefaultLimit) {
  std::mt19937_64 rng(73);
  int ran = 0;
  for (int k = 0; k < 300; ++k) {
    auto s = oracle::random_scenario(rng);
    if (!validate_assumptions(s).blocking().empty() || !tolerates(s)) continue;
    ++ran;
    auto r = Simulator(s).run();
    EXPECT_EQ(r.status, Status::Success) << format_tree(s.mission);
    EXPECT_LE(r.ticks, default_tick_limit(s));
    check_trace(r, s);
    for (const auto& g : s.global_tasks) EXPECT_TRUE(r.world.has_fact(g.id + "_done"));
  }
  EXPECT_GT(ran, 100);
}

TEST(Simulator, IllegalEffectFailsTheMission) {
  auto s = parse_scenario(
      "parts 1\nnominal false\nlocal Fix\nrobot R1 Fix=3\n"
      "global Solder needs Fix 1 1 effect solder 1\n"
      "tree (root (task Solder))\n");
  auto r = Simulator(s).run();
  EXPECT_EQ(r.status, Status::Failure);
  EXPECT_NE(first(r, EventKind::GlobalTaskFailed, "Solder"), 0u);
  EXPECT_EQ(r.trace.back().kind, EventKind::MissionFailed);
}

TEST(Simulator, ZeroPerformanceStallsUntilTheLimit) {
  auto s = parse_scenario("local Lift\nrobot R1 Lift=0\nglobal A needs Lift 1 1\ntree (root (task A))\n");
  SimOptions o;
  o.tick_limit = 25;
  auto r = Simulator(s, {}, o).run();
  EXPECT_TRUE(r.limit_reached);
  EXPECT_EQ(r.ticks, 25u);
}

TEST(Simulator, BlockingViolationsAreRejected) {
  auto s = parse_scenario("local Lift\nrobot R1 Lift=1\nglobal A needs Lift 2 2\ntree (root (task A))\n");
  EXPECT_THROW(Simulator{s}, ConfigError);
}

TEST(Simulator, LosingEveryRobotStopsProgress) {
  auto s = load_scenario(scenario_path("explore_two_robots.scn"));
  SimOptions o;
  o.tick_limit = 40;
  auto r = Simulator(s, {{3, Fault::major(0)}, {3, Fault::major(1)}}, o).run();
  EXPECT_NE(r.status, Status::Success);
}

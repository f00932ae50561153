#pragma once

/// @file scenario_io.hpp
/// @brief Text formats: scenario files, s-expression trees, fault
/// schedules and standalone assignment problems.
///
/// All formats share one tokenizer: whitespace separates tokens, `#` starts
/// a comment, `(`, `)` and `=` are tokens of their own, and double quotes
/// delimit strings.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mrbt/assignment.hpp"
#include "mrbt/bt.hpp"
#include "mrbt/error.hpp"
#include "mrbt/fault_analysis.hpp"
#include "mrbt/mission.hpp"

namespace mrbt {

struct Token {
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
  bool quoted = false;

  bool is(std::string_view s) const { return !quoted && text == s; }
};

inline std::vector<Token> tokenize(std::string_view text, const std::string& source) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&] {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance();
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
    } else if (c == '(' || c == ')' || c == '=') {
      out.push_back({std::string(1, c), line, col, false});
      advance();
    } else if (c == '"') {
      Token t{"", line, col, true};
      advance();
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\n') throw ParseError(source, t.line, t.column, "unterminated string");
        t.text += text[i];
        advance();
      }
      if (i == text.size()) throw ParseError(source, t.line, t.column, "unterminated string");
      advance();
      out.push_back(std::move(t));
    } else {
      Token t{"", line, col, false};
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '(' &&
             text[i] != ')' && text[i] != '=' && text[i] != '#' && text[i] != '"') {
        t.text += text[i];
        advance();
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

/// Cursor over a token list with line-anchored errors.
class Reader {
 public:
  Reader(std::vector<Token> tokens, std::string source) : t_(std::move(tokens)), source_(std::move(source)) {}

  bool done() const { return pos_ >= t_.size(); }
  const Token& peek() const {
    if (done()) fail_at_end("unexpected end of input");
    return t_[pos_];
  }
  const Token& next() {
    const Token& tok = peek();
    ++pos_;
    return tok;
  }
  /// True when the next token sits on `line`.
  bool on_line(std::size_t line) const { return !done() && t_[pos_].line == line; }

  const Token& expect(std::string_view s) {
    const Token& tok = next();
    if (!tok.is(s)) fail(tok, "expected '" + std::string(s) + "', got '" + tok.text + "'");
    return tok;
  }

  const Token& word(std::string_view what) {
    const Token& tok = next();
    if (!tok.quoted && (tok.text == "(" || tok.text == ")" || tok.text == "="))
      fail(tok, "expected " + std::string(what) + ", got '" + tok.text + "'");
    return tok;
  }

  std::uint64_t integer(const Token& tok, std::string_view what) const {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
    if (ec != std::errc() || p != tok.text.data() + tok.text.size() || tok.quoted)
      fail(tok, std::string(what) + " must be a non-negative integer, got '" + tok.text + "'");
    return v;
  }
  std::uint64_t integer(std::string_view what) { return integer(next(), what); }

  double decimal(const Token& tok, std::string_view what) const {
    double v = 0;
    auto [p, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
    if (ec != std::errc() || p != tok.text.data() + tok.text.size() || tok.quoted || !std::isfinite(v) || v < 0)
      fail(tok, std::string(what) + " must be a finite non-negative number, got '" + tok.text + "'");
    return v;
  }

  [[noreturn]] void fail(const Token& tok, const std::string& msg) const {
    throw ParseError(source_, tok.line, tok.column, msg);
  }
  [[noreturn]] void fail_at_end(const std::string& msg) const {
    throw ParseError(source_, t_.empty() ? 1 : t_.back().line, 0, msg);
  }

  const std::string& source() const { return source_; }

 private:
  std::vector<Token> t_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline Node read_node(Reader& r) {
  const Token& open = r.expect("(");
  const Token& kind = r.word("a node kind");
  Node n;
  auto children = [&] {
    while (!r.peek().is(")")) {
      if (!r.peek().is("(")) r.fail(r.peek(), "expected a child node, got '" + r.peek().text + "'");
      n.children.push_back(read_node(r));
    }
  };
  auto atoms = [&] {
    while (!r.peek().is(")")) {
      const Token& a = r.word("a leaf argument");
      n.args.push_back(a.text);
    }
  };

  if (kind.is("root")) {
    n.kind = NodeKind::Root;
    children();
  } else if (kind.is("selector") || kind.is("fallback") || kind.is("sequence")) {
    n.kind = kind.is("sequence") ? NodeKind::Sequence : NodeKind::Selector;
    if (r.peek().is("parallelizable")) {
      r.next();
      n.parallelizable = true;
    }
    children();
  } else if (kind.is("parallel")) {
    n.kind = NodeKind::Parallel;
    n.threshold = r.integer("parallel threshold M");
    children();
  } else if (kind.is("task")) {
    n = global_task_node(r.word("a global task id").text);
  } else if (kind.is("action") || kind.is("condition")) {
    n.kind = kind.is("action") ? NodeKind::Action : NodeKind::Condition;
    n.name = r.word("a leaf id").text;
    atoms();
  } else {
    r.fail(kind, "unknown node kind '" + kind.text + "'");
  }
  n.line = open.line;
  r.expect(")");
  auto errors = structure_errors(n);
  if (!errors.empty()) r.fail(open, errors.front());
  return n;
}

}  // namespace detail

// Trees ------------------------------------------------------------------------

inline Node parse_tree(std::string_view text, const std::string& source = "") {
  detail::Reader r(tokenize(text, source), source);
  Node n = detail::read_node(r);
  if (!r.done()) r.fail(r.peek(), "trailing input after the tree");
  return n;
}

inline Node load_tree(const std::filesystem::path& path) { return parse_tree(read_file(path), path.string()); }

namespace detail {

inline std::string quote_if_needed(const std::string& s) {
  bool plain = !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '=' || c == '#' || c == '"';
  });
  return plain ? s : "\"" + s + "\"";
}

inline void print_node(const Node& n, std::ostream& os, std::size_t depth) {
  os << std::string(depth * 2, ' ') << '(';
  if (is_global_task_leaf(n)) {
    os << "task " << quote_if_needed(n.arg()) << ')';
    return;
  }
  switch (n.kind) {
    case NodeKind::Action:
    case NodeKind::Condition:
      os << to_string(n.kind) << ' ' << quote_if_needed(n.name);
      for (const auto& a : n.args) os << ' ' << quote_if_needed(a);
      os << ')';
      return;
    case NodeKind::Parallel:
      os << "parallel " << n.threshold;
      break;
    default:
      os << to_string(n.kind);
      if (n.parallelizable) os << " parallelizable";
      break;
  }
  for (const auto& c : n.children) {
    os << '\n';
    print_node(c, os, depth + 1);
  }
  os << ')';
}

}  // namespace detail

/// Inverse of parse_tree, one node per line.
inline std::string format_tree(const Node& n) {
  std::ostringstream os;
  detail::print_node(n, os, 0);
  os << '\n';
  return os.str();
}

// Scenarios --------------------------------------------------------------------

namespace detail {

class ScenarioParser {
 public:
  ScenarioParser(std::string_view text, std::string source, std::filesystem::path base)
      : r_(tokenize(text, source), source), base_(std::move(base)) {}

  Scenario run() {
    s_.source = r_.source();
    while (!r_.done()) directive();
    for_each_node(s_.mission, [&](const Node& n) {
      if (is_global_task_leaf(n) && !s_.global_index(n.arg()))
        throw ParseError(s_.source, n.line, 0, "tree references unknown global task '" + n.arg() + "'");
    });
    return std::move(s_);
  }

 private:
  void directive() {
    const Token& key = r_.word("a directive");
    const std::size_t line = key.line;
    if (key.is("scenario")) {
      s_.name = r_.word("a scenario name").text;
    } else if (key.is("parts")) {
      s_.world.parts = r_.integer("part count");
    } else if (key.is("broken")) {
      while (r_.on_line(line)) {
        const Token& t = r_.next();
        if (t.is("random")) {
          s_.world.random_parts = true;
          continue;
        }
        auto k = r_.integer(t, "part number");
        if (k < 1 || k > s_.world.parts)
          r_.fail(t, "part " + t.text + " outside 1.." + std::to_string(s_.world.parts) + " (declare parts first)");
        s_.world.broken.push_back(k);
      }
    } else if (key.is("nominal")) {
      const Token& t = r_.word("true or false");
      if (!t.is("true") && !t.is("false")) r_.fail(t, "nominal expects true or false");
      s_.world.nominal = t.is("true");
    } else if (key.is("fact")) {
      s_.world.facts.insert(r_.word("a fact name").text);
    } else if (key.is("local")) {
      local(line);
    } else if (key.is("robot")) {
      robot(line);
    } else if (key.is("global")) {
      global(key);
    } else if (key.is("tree")) {
      tree(key);
      return;
    } else {
      r_.fail(key, "unknown directive '" + key.text + "'");
    }
    if (r_.on_line(line)) r_.fail(r_.peek(), "unexpected '" + r_.peek().text + "'");
  }

  void local(std::size_t line) {
    const Token& id = r_.word("a local task id");
    if (s_.local_index(id.text)) r_.fail(id, "duplicate local task '" + id.text + "'");
    if (!s_.robots.empty()) r_.fail(id, "local tasks must be declared before robots");
    LocalTask t{id.text, id.text, 3.0};
    while (r_.on_line(line)) {
      const Token& tok = r_.next();
      if (tok.is("cost")) {
        t.base_cost = r_.decimal(r_.next(), "cost");
        if (t.base_cost <= 0) r_.fail(tok, "cost must be positive");
      } else if (tok.quoted) {
        t.display = tok.text;
      } else {
        r_.fail(tok, "unexpected '" + tok.text + "' in local task");
      }
    }
    s_.local_tasks.push_back(std::move(t));
  }

  void robot(std::size_t line) {
    const Token& name = r_.word("a robot name");
    if (s_.robot_index(name.text) && s_.robots[*s_.robot_index(name.text)].name == name.text)
      r_.fail(name, "duplicate robot '" + name.text + "'");
    Robot rb{name.text, "", std::vector<double>(s_.local_tasks.size(), kIncapable), {}};
    while (r_.on_line(line)) {
      const Token& tok = r_.word("a capability");
      if (tok.is("type")) {
        rb.type = r_.word("a robot type").text;
        continue;
      }
      auto j = s_.local_index(tok.text);
      if (!j) r_.fail(tok, "unknown local task '" + tok.text + "'");
      r_.expect("=");
      const Token& v = r_.next();
      rb.performance[*j] = v.is("incapable") ? kIncapable : r_.decimal(v, "performance");
    }
    if (rb.capabilities().empty()) r_.fail(name, "robot '" + name.text + "' has an empty capability set");
    s_.robots.push_back(std::move(rb));
  }

  void global(const Token& key) {
    const Token& id = r_.word("a global task id");
    if (s_.global_index(id.text)) r_.fail(id, "duplicate global task '" + id.text + "'");
    GlobalTask g;
    g.id = id.text;
    g.line = key.line;
    while (r_.on_line(key.line)) {
      const Token& tok = r_.next();
      if (tok.is("needs")) {
        const Token& l = r_.word("a local task id");
        auto j = s_.local_index(l.text);
        if (!j) r_.fail(l, "unknown local task '" + l.text + "'");
        if (g.demand_for(*j)) r_.fail(l, "local task '" + l.text + "' listed twice");
        const Token& nu = r_.next();
        const Token& mu = r_.next();
        Demand d{*j, static_cast<unsigned>(r_.integer(nu, "nu")), static_cast<unsigned>(r_.integer(mu, "mu"))};
        if (d.min_robots > d.max_robots) r_.fail(nu, "nu > mu for '" + l.text + "'");
        g.demands.push_back(d);
      } else if (tok.is("effect")) {
        while (r_.on_line(key.line)) g.effect.push_back(r_.next().text);
        if (g.effect.empty()) r_.fail(tok, "effect needs a kind");
      } else {
        r_.fail(tok, "unexpected '" + tok.text + "' in global task");
      }
    }
    if (g.demands.empty()) r_.fail(id, "global task '" + g.id + "' needs at least one local task");
    s_.global_tasks.push_back(std::move(g));
  }

  void tree(const Token& key) {
    if (r_.peek().is("file")) {
      r_.next();
      const Token& path = r_.word("a tree file path");
      std::filesystem::path p = path.text;
      if (p.is_relative()) p = base_ / p;
      s_.mission = load_tree(p);
      if (r_.on_line(key.line)) r_.fail(r_.peek(), "unexpected '" + r_.peek().text + "'");
      return;
    }
    s_.mission = read_node(r_);
  }

  Reader r_;
  std::filesystem::path base_;
  Scenario s_;
};

}  // namespace detail

/// `base` resolves relative `tree file` paths.
inline Scenario parse_scenario(std::string_view text, const std::string& source = "",
                               const std::filesystem::path& base = ".") {
  return detail::ScenarioParser(text, source, base).run();
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path), path.string(), path.parent_path().empty() ? "." : path.parent_path());
}

// Fault schedules ----------------------------------------------------------------

struct ScheduledFault {
  std::uint64_t tick = 0;
  Fault fault;
};

/// Lines `at <tick> major <robot>` or `at <tick> minor <robot> <task>...`,
/// ticks non-decreasing.
inline std::vector<ScheduledFault> parse_faults(std::string_view text, const Scenario& s,
                                                const std::string& source = "") {
  detail::Reader r(tokenize(text, source), source);
  std::vector<ScheduledFault> out;
  while (!r.done()) {
    const Token& at = r.expect("at");
    ScheduledFault sf;
    const Token& tick = r.next();
    sf.tick = r.integer(tick, "tick");
    if (sf.tick < 1) r.fail(tick, "fault ticks start at 1");
    if (!out.empty() && sf.tick < out.back().tick) r.fail(tick, "fault ticks must be non-decreasing");
    const Token& kind = r.word("major or minor");
    const Token& who = r.word("a robot");
    auto i = s.robot_index(who.text);
    if (!i) r.fail(who, "unknown robot '" + who.text + "'");
    if (kind.is("major")) {
      sf.fault = Fault::major(*i);
    } else if (kind.is("minor")) {
      std::set<std::size_t> tasks;
      while (r.on_line(at.line)) {
        const Token& t = r.word("a local task");
        auto j = s.local_index(t.text);
        if (!j) r.fail(t, "unknown local task '" + t.text + "'");
        if (!s.robots[*i].has_capability(*j))
          r.fail(t, "'" + t.text + "' is not a capability of '" + s.robots[*i].name + "'");
        tasks.insert(*j);
      }
      if (tasks.empty()) r.fail(kind, "minor fault needs at least one local task");
      sf.fault = Fault::minor(*i, std::move(tasks));
    } else {
      r.fail(kind, "fault kind must be major or minor, got '" + kind.text + "'");
    }
    if (r.on_line(at.line)) r.fail(r.peek(), "unexpected '" + r.peek().text + "'");
    out.push_back(std::move(sf));
  }
  return out;
}

inline std::vector<ScheduledFault> load_faults(const std::filesystem::path& path, const Scenario& s) {
  return parse_faults(read_file(path), s, path.string());
}

// Assignment problems --------------------------------------------------------------

struct ProblemFile {
  std::vector<std::string> tasks;
  std::vector<std::string> robots;
  AssignmentProblem problem;
  std::vector<ExclusionConstraint> exclusions;
};

/// ```
/// tasks A B
/// robot r1 A=2 B=incapable
/// bound A 1 2
/// exclude r1 r2 A [undeployed]
/// pin r1 A
/// ```
inline ProblemFile parse_problem(std::string_view text, const std::string& source = "") {
  detail::Reader r(tokenize(text, source), source);
  ProblemFile out;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::size_t, std::size_t>> bounds_seen;
  std::vector<unsigned> lower, upper;
  std::vector<std::optional<std::size_t>> pins;
  struct PendingExclusion {
    Token robot, other, task;
    ExclusionScope scope;
  };
  std::vector<PendingExclusion> excl;
  std::vector<std::pair<Token, Token>> pin_refs;

  auto task_of = [&](const Token& t) {
    auto it = std::find(out.tasks.begin(), out.tasks.end(), t.text);
    if (it == out.tasks.end()) r.fail(t, "unknown task '" + t.text + "'");
    return static_cast<std::size_t>(it - out.tasks.begin());
  };
  auto robot_of = [&](const Token& t) {
    auto it = std::find(out.robots.begin(), out.robots.end(), t.text);
    if (it == out.robots.end()) r.fail(t, "unknown robot '" + t.text + "'");
    return static_cast<std::size_t>(it - out.robots.begin());
  };

  while (!r.done()) {
    const Token& key = r.word("a directive");
    const std::size_t line = key.line;
    if (key.is("tasks")) {
      if (!out.tasks.empty()) r.fail(key, "tasks declared twice");
      while (r.on_line(line)) {
        const Token& t = r.word("a task id");
        if (std::find(out.tasks.begin(), out.tasks.end(), t.text) != out.tasks.end())
          r.fail(t, "duplicate task '" + t.text + "'");
        out.tasks.push_back(t.text);
      }
      lower.assign(out.tasks.size(), 0);
      upper.assign(out.tasks.size(), 0);
    } else if (key.is("robot")) {
      if (out.tasks.empty()) r.fail(key, "declare tasks before robots");
      const Token& name = r.word("a robot name");
      if (std::find(out.robots.begin(), out.robots.end(), name.text) != out.robots.end())
        r.fail(name, "duplicate robot '" + name.text + "'");
      out.robots.push_back(name.text);
      std::vector<double> row(out.tasks.size(), kIncapable);
      while (r.on_line(line)) {
        std::size_t j = task_of(r.word("a task id"));
        r.expect("=");
        const Token& v = r.next();
        row[j] = v.is("incapable") ? kIncapable : r.decimal(v, "performance");
      }
      rows.push_back(std::move(row));
    } else if (key.is("bound")) {
      std::size_t j = task_of(r.word("a task id"));
      lower[j] = static_cast<unsigned>(r.integer("lower bound"));
      upper[j] = static_cast<unsigned>(r.integer("upper bound"));
    } else if (key.is("exclude")) {
      PendingExclusion e{r.word("a robot"), r.word("a robot"), r.word("a task id"), ExclusionScope::SameTask};
      if (r.on_line(line)) {
        const Token& scope = r.next();
        if (!scope.is("undeployed")) r.fail(scope, "exclusion scope must be 'undeployed'");
        e.scope = ExclusionScope::Undeployed;
      }
      excl.push_back(std::move(e));
    } else if (key.is("pin")) {
      Token rb = r.word("a robot");
      Token t = r.word("a task id");
      pin_refs.emplace_back(std::move(rb), std::move(t));
    } else {
      r.fail(key, "unknown directive '" + key.text + "'");
    }
    if (r.on_line(line)) r.fail(r.peek(), "unexpected '" + r.peek().text + "'");
  }

  out.problem.performance = PerformanceTable(out.robots.size(), out.tasks.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < out.tasks.size(); ++j) out.problem.performance.at(i, j) = rows[i][j];
  out.problem.lower = lower;
  out.problem.upper = upper;
  for (const auto& [rb, t] : pin_refs) {
    if (out.problem.pinned.empty()) out.problem.pinned.assign(out.robots.size(), std::nullopt);
    out.problem.pinned[robot_of(rb)] = task_of(t);
  }
  for (const auto& e : excl) {
    std::size_t a = robot_of(e.robot), b = robot_of(e.other);
    if (a == b) r.fail(e.other, "an exclusion needs two different robots");
    out.exclusions.push_back({a, b, task_of(e.task), e.scope});
  }
  return out;
}

inline ProblemFile load_problem(const std::filesystem::path& path) {
  return parse_problem(read_file(path), path.string());
}

}  // namespace mrbt

#pragma once

/// @file world.hpp
/// @brief Shared physical state the simulated fleet acts on: the vehicle
/// cover, its parts, and free-form facts.

#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mrbt/bt.hpp"
#include "mrbt/error.hpp"
#include "mrbt/mission.hpp"

namespace mrbt {

enum class PartStatus { Undiagnosed, Ok, Broken, Fixed };
enum class CoverState { Screwed, Unscrewed, Removed, Replaced };

constexpr std::string_view to_string(PartStatus s) noexcept {
  switch (s) {
    case PartStatus::Undiagnosed: return "undiagnosed";
    case PartStatus::Ok: return "ok";
    case PartStatus::Broken: return "broken";
    case PartStatus::Fixed: return "fixed";
  }
  return "?";
}

constexpr std::string_view to_string(CoverState s) noexcept {
  switch (s) {
    case CoverState::Screwed: return "screwed";
    case CoverState::Unscrewed: return "unscrewed";
    case CoverState::Removed: return "removed";
    case CoverState::Replaced: return "replaced";
  }
  return "?";
}

struct Part {
  bool faulty = false;  // ground truth, revealed by diagnosis
  PartStatus status = PartStatus::Undiagnosed;
  bool hw_replaced = false;
  bool wires_replaced = false;
  bool soldered = false;
};

/// Outcome of applying one effect.
struct EffectResult {
  bool ok = true;
  std::string reason;
};

class WorldState {
 public:
  WorldState() = default;

  /// Broken parts come from the setup, or from `seed` when marked random.
  WorldState(const WorldSetup& setup, std::uint64_t seed) : parts_(setup.parts), nominal_(setup.nominal) {
    facts_ = setup.facts;
    if (setup.random_parts) {
      std::mt19937_64 rng(seed);
      for (auto& p : parts_) p.faulty = (rng() >> 63) != 0;
    } else {
      for (auto k : setup.broken) {
        if (k < 1 || k > parts_.size())
          throw ConfigError("broken part " + std::to_string(k) + " outside 1.." + std::to_string(parts_.size()));
        parts_[k - 1].faulty = true;
      }
    }
  }

  std::size_t parts() const noexcept { return parts_.size(); }
  const Part& part(std::size_t k) const { return parts_.at(k - 1); }
  CoverState cover() const noexcept { return cover_; }
  bool nominal() const noexcept { return nominal_; }
  bool has_fact(std::string_view f) const { return facts_.count(std::string(f)) > 0; }

  /// Applies the effect of global task `global`. Repeating an effect
  /// already applied for the same global task is a no-op.
  EffectResult apply(const std::vector<std::string>& effect, std::string_view global) {
    if (effect.empty() || effect[0] == "none") return {};
    const std::string key = std::string(global) + "\x1f" + join(effect);
    if (applied_.count(key)) return {};
    EffectResult r = dispatch(effect);
    if (r.ok) applied_.insert(key);
    return r;
  }

  /// Evaluates a mission-tree condition against the world.
  bool check(const Node& c) const {
    const std::string& id = c.name;
    if (id == "true") return true;
    if (id == "false") return false;
    if (id == "nominal") return nominal_;
    if (id == "fact") return has_fact(c.arg());
    if (id == "part_ok") return part_at(c.arg(), id).status == PartStatus::Ok;
    if (id == "part_fixed") return part_at(c.arg(), id).status == PartStatus::Fixed;
    if (id == "part_broken") return part_at(c.arg(), id).status == PartStatus::Broken;
    if (id == "cover") return to_string(cover_) == c.arg();
    throw ConfigError("unknown condition '" + id + "'" + (c.line ? " at line " + std::to_string(c.line) : ""));
  }

  static bool is_known_condition(std::string_view id) {
    for (std::string_view k : {"true", "false", "nominal", "fact", "part_ok", "part_fixed", "part_broken", "cover"})
      if (k == id) return true;
    return false;
  }

  static bool is_known_effect(std::string_view kind) {
    for (std::string_view k : {"none", "unscrew", "remove_cover", "place_cover", "place_screws", "diagnose",
                               "replace_hw", "replace_wires", "solder", "fact"})
      if (k == kind) return true;
    return false;
  }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
    return s;
  }

  const Part& part_at(const std::string& arg, const std::string& what) const {
    std::size_t k = 0;
    try {
      k = std::stoul(arg);
    } catch (const std::exception&) {
      throw ConfigError(what + ": part number expected, got '" + arg + "'");
    }
    if (k < 1 || k > parts_.size())
      throw ConfigError(what + ": part " + arg + " outside 1.." + std::to_string(parts_.size()));
    return parts_[k - 1];
  }
  Part& part_at(const std::string& arg, const std::string& what) {
    return const_cast<Part&>(static_cast<const WorldState&>(*this).part_at(arg, what));
  }

  EffectResult cover_step(CoverState from, CoverState to, std::string_view verb) {
    if (cover_ != from)
      return {false, std::string(verb) + " needs the cover " + std::string(to_string(from)) + ", it is " +
                         std::string(to_string(cover_))};
    cover_ = to;
    return {};
  }

  EffectResult dispatch(const std::vector<std::string>& e) {
    const std::string& kind = e[0];
    if (kind == "unscrew") return cover_step(CoverState::Screwed, CoverState::Unscrewed, kind);
    if (kind == "remove_cover") return cover_step(CoverState::Unscrewed, CoverState::Removed, kind);
    if (kind == "place_cover") return cover_step(CoverState::Removed, CoverState::Replaced, kind);
    if (kind == "place_screws") return cover_step(CoverState::Replaced, CoverState::Screwed, kind);
    if (kind == "fact") {
      if (e.size() < 2) throw ConfigError("effect 'fact' needs a name");
      facts_.insert(e[1]);
      return {};
    }
    if (e.size() < 2) throw ConfigError("effect '" + kind + "' needs a part number");
    Part& p = part_at(e[1], kind);
    const std::string label = kind + " " + e[1];
    if (kind == "diagnose") {
      if (cover_ != CoverState::Removed) return {false, label + ": cover not removed"};
      if (p.status == PartStatus::Undiagnosed) p.status = p.faulty ? PartStatus::Broken : PartStatus::Ok;
      return {};
    }
    if (kind == "replace_hw") {
      if (p.status != PartStatus::Broken) return {false, label + ": part is " + std::string(to_string(p.status))};
      p.hw_replaced = true;
      return {};
    }
    if (kind == "replace_wires") {
      if (!p.hw_replaced) return {false, label + ": hardware not replaced yet"};
      p.wires_replaced = true;
      return {};
    }
    if (kind == "solder") {
      if (!p.wires_replaced) return {false, label + ": wires not replaced yet"};
      p.soldered = true;
      p.status = PartStatus::Fixed;
      return {};
    }
    throw ConfigError("unknown effect '" + kind + "'");
  }

  std::vector<Part> parts_;
  CoverState cover_ = CoverState::Screwed;
  bool nominal_ = true;
  std::set<std::string> facts_;
  std::set<std::string> applied_;
};

}  // namespace mrbt

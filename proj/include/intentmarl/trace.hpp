#pragma once

#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "intent.hpp"
#include "policies.hpp"
#include "world.hpp"

namespace intentmarl {

inline constexpr const char* kTraceSchema = "intentmarl.trace";
inline constexpr int kTraceSchemaVersion = 1;

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline nlohmann::ordered_json cell_json(Cell c) { return nlohmann::ordered_json::array({c.x, c.y}); }

inline std::string agent_name(AgentKey a) {
  return std::string(a.type == AgentType::Robot ? "robot:" : "human:") + std::to_string(a.id);
}

}  // namespace detail

/// Line-delimited JSON trace: one header record, then one record per step
/// carrying every robot's decision. Field order is fixed.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out) : out_(&out) {}

  void header(const Scene& scene, PolicyKind kind, LearnMode mode, std::uint64_t seed, int n_robots) {
    nlohmann::ordered_json j;
    j["type"] = "header";
    j["schema"] = kTraceSchema;
    j["version"] = kTraceSchemaVersion;
    j["scene"] = scene.name;
    j["policy"] = to_string(kind);
    j["mode"] = mode == LearnMode::Train ? "train" : "evaluate";
    j["seed"] = seed;
    j["n_robots"] = n_robots;
    nlohmann::ordered_json goals = nlohmann::ordered_json::array();
    for (const auto& g : scene.goals) goals.push_back({{"id", g.id}, {"kind", to_string(g.kind)}, {"cell", detail::cell_json(g.position)}});
    j["goals"] = std::move(goals);
    write(j);
  }

  void step(const WorldState& world, const TeamObservation& obs, std::span<const RewardEvent> events,
            std::span<const DecisionRecord> decisions) {
    const Scene& sc = world.scene();
    nlohmann::ordered_json j;
    j["type"] = "step";
    j["step"] = obs.step;
    nlohmann::ordered_json robots = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < world.robots().size(); ++i) {
      const auto& r = world.robots()[i];
      nlohmann::ordered_json rj;
      rj["id"] = r.id;
      rj["pos"] = detail::cell_json(r.position);
      rj["pursued"] = goal_name(sc, r.goal);
      if (i < decisions.size()) {
        const auto& d = decisions[i];
        rj["chosen"] = goal_name(sc, d.chosen);
        rj["kept"] = d.kept;
        rj["reward"] = d.reward;
        if (!d.utilities.empty()) {
          nlohmann::ordered_json u = nlohmann::ordered_json::object();
          for (const auto& [g, v] : d.utilities) u[goal_name(sc, g)] = v;
          rj["utilities"] = std::move(u);
        }
        if (!d.beliefs.empty()) {
          nlohmann::ordered_json bj = nlohmann::ordered_json::object();
          for (const auto& [agent, b] : d.beliefs) {
            nlohmann::ordered_json e = nlohmann::ordered_json::object();
            for (const auto& [g, p] : b.entries) e[goal_name(sc, g)] = p;
            bj[detail::agent_name(agent)] = std::move(e);
          }
          rj["beliefs"] = std::move(bj);
        }
        if (d.delta) rj["delta"] = *d.delta;
        rj["r_bar"] = d.r_bar;
      }
      robots.push_back(std::move(rj));
    }
    j["robots"] = std::move(robots);
    nlohmann::ordered_json humans = nlohmann::ordered_json::array();
    for (const auto& h : obs.humans) humans.push_back({{"id", h.id}, {"pos", detail::cell_json(h.position)}});
    j["visible_humans"] = std::move(humans);
    if (!obs.hover_fallback.empty()) j["hover_fallback"] = obs.hover_fallback;
    nlohmann::ordered_json evs = nlohmann::ordered_json::array();
    for (const auto& e : events) {
      evs.push_back({{"human", e.human_id},
                     {"building", sc.goals[e.building].id},
                     {"observers", e.observers},
                     {"rewards", e.per_robot_reward}});
    }
    j["events"] = std::move(evs);
    write(j);
  }

 private:
  void write(const nlohmann::ordered_json& j) {
    *out_ << j.dump() << '\n';
    if (!*out_) throw TraceError("trace sink write failure");
  }
  std::ostream* out_;
};

struct ReplaySummary {
  long n_e = 0;
  long n_o = 0;
  long steps = 0;
  long distinct_steps = 0;
  double capture_rate() const { return n_e > 0 ? static_cast<double>(n_o) / static_cast<double>(n_e) : 0.0; }
  double distinct_building_fraction() const {
    return steps > 0 ? static_cast<double>(distinct_steps) / static_cast<double>(steps) : 0.0;
  }
};

/// True when every robot pursues a building and no two pursue the same one.
inline bool distinct_buildings(std::span<const std::string> pursued, const std::set<std::string>& buildings) {
  if (pursued.empty()) return false;
  std::set<std::string> seen;
  for (const auto& g : pursued) {
    if (!buildings.count(g) || !seen.insert(g).second) return false;
  }
  return true;
}

/// Recomputes capture and distinct-building statistics from a trace stream.
inline ReplaySummary replay_trace(std::istream& in) {
  ReplaySummary s;
  std::set<std::string> buildings;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw TraceError(std::string("trace: malformed record: ") + e.what());
    }
    const auto type = j.value("type", std::string{});
    if (type == "header") {
      if (j.value("schema", std::string{}) != kTraceSchema || j.value("version", 0) != kTraceSchemaVersion) {
        throw TraceError("trace: unsupported schema");
      }
      for (const auto& g : j["goals"]) {
        if (g["kind"] == "Building") buildings.insert(g["id"].get<std::string>());
      }
      have_header = true;
    } else if (type == "step") {
      if (!have_header) throw TraceError("trace: step before header");
      ++s.steps;
      std::vector<std::string> pursued;
      for (const auto& r : j["robots"]) pursued.push_back(r["pursued"].get<std::string>());
      if (distinct_buildings(pursued, buildings)) ++s.distinct_steps;
      for (const auto& e : j["events"]) {
        ++s.n_e;
        if (!e["observers"].empty()) ++s.n_o;
      }
    } else {
      throw TraceError("trace: unknown record type '" + type + "'");
    }
  }
  if (!have_header) throw TraceError("trace: missing header");
  return s;
}

}  // namespace intentmarl

#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "cell.hpp"
#include "scene.hpp"

namespace intentmarl {

enum class GoalType { Building, Entrance, Crossroad, HumanTrack };
enum class Relation { SameInstance, DifferentInstance };

inline constexpr std::array<GoalType, 4> kGoalTypes = {GoalType::Building, GoalType::Entrance, GoalType::Crossroad,
                                                       GoalType::HumanTrack};

inline const char* to_string(GoalType t) {
  switch (t) {
    case GoalType::Building: return "Building";
    case GoalType::Entrance: return "Entrance";
    case GoalType::Crossroad: return "Crossroad";
    case GoalType::HumanTrack: return "HumanTrack";
  }
  return "?";
}

inline const char* to_string(Relation r) { return r == Relation::SameInstance ? "Same" : "Different"; }

inline constexpr GoalType goal_type(GoalKind kind) {
  switch (kind) {
    case GoalKind::Building: return GoalType::Building;
    case GoalKind::Entrance: return GoalType::Entrance;
    case GoalKind::Crossroad: return GoalType::Crossroad;
    case GoalKind::Human: return GoalType::HumanTrack;
  }
  return GoalType::Building;
}

/// Goal types an agent of `type` can pursue. Humans only head for buildings and entrances.
inline constexpr bool pursuable(AgentType type, GoalType goal) {
  return type == AgentType::Robot || goal == GoalType::Building || goal == GoalType::Entrance;
}

/// One parameter slot: either the self value of a goal type, or the influence
/// of (other agent type, other goal type, relation) on pursuing `own`.
struct ParamKey {
  bool self = true;
  GoalType own = GoalType::Building;
  AgentType other_agent = AgentType::Robot;
  GoalType other_goal = GoalType::Building;
  Relation relation = Relation::DifferentInstance;

  std::string name() const {
    if (self) return std::string("self|") + to_string(own);
    return std::string(to_string(own)) + "|" + to_string(other_agent) + "|" + to_string(other_goal) + "|" +
           to_string(relation);
  }
};

namespace detail {

struct KeyTable {
  // Self slots, then influences. SameInstance only when own == other goal type;
  // other goal types restricted to those the other agent type can pursue.
  std::array<ParamKey, 64> keys{};
  std::size_t size = 0;
  std::array<int, 4> self_index{};
  std::array<std::array<std::array<std::array<int, 2>, 4>, 2>, 4> influence_index{};

  constexpr KeyTable() {
    for (auto& a : influence_index)
      for (auto& b : a)
        for (auto& c : b) c = {-1, -1};
    for (std::size_t k = 0; k < 4; ++k) {
      self_index[k] = static_cast<int>(size);
      keys[size++] = ParamKey{true, kGoalTypes[k], AgentType::Robot, kGoalTypes[k], Relation::SameInstance};
    }
    constexpr std::array<AgentType, 2> agents = {AgentType::Robot, AgentType::Human};
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t l = 0; l < 4; ++l) {
          if (!pursuable(agents[a], kGoalTypes[l])) continue;
          if (k == l) {
            influence_index[k][a][l][0] = static_cast<int>(size);
            keys[size++] = ParamKey{false, kGoalTypes[k], agents[a], kGoalTypes[l], Relation::SameInstance};
          }
          influence_index[k][a][l][1] = static_cast<int>(size);
          keys[size++] = ParamKey{false, kGoalTypes[k], agents[a], kGoalTypes[l], Relation::DifferentInstance};
        }
      }
    }
  }
};

inline constexpr KeyTable kKeyTable{};

}  // namespace detail

/// Number of parameter slots: 4 self values + 20 robot influences + 10 human influences.
inline constexpr std::size_t kNumParams = detail::kKeyTable.size;

inline const ParamKey& param_key(std::size_t i) { return detail::kKeyTable.keys[i]; }

inline constexpr std::size_t self_slot(GoalType own) {
  return static_cast<std::size_t>(detail::kKeyTable.self_index[static_cast<std::size_t>(own)]);
}

/// Slot index of an influence key, or std::nullopt for a structurally impossible key.
inline constexpr std::optional<std::size_t> influence_slot(GoalType own, AgentType other, GoalType other_goal,
                                                           Relation rel) {
  const int i = detail::kKeyTable.influence_index[static_cast<std::size_t>(own)][other == AgentType::Human ? 1 : 0]
                                                 [static_cast<std::size_t>(other_goal)][rel == Relation::SameInstance ? 0 : 1];
  if (i < 0) return std::nullopt;
  return static_cast<std::size_t>(i);
}

using ParamArray = std::array<double, kNumParams>;

/// Learned intrinsic values, one entry per typed slot.
struct Theta {
  ParamArray values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double self_value(GoalType t) const { return values[self_slot(t)]; }
  double influence(GoalType own, AgentType other, GoalType other_goal, Relation rel) const {
    const auto s = influence_slot(own, other, other_goal, rel);
    return s ? values[*s] : 0.0;
  }
  bool finite() const {
    for (const double v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
  friend bool operator==(const Theta&, const Theta&) = default;
};

/// Features of one (history, own goal) pair over the same slots as Theta.
struct FeatureVector {
  ParamArray values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kThetaSchema = "intentmarl.theta";
inline constexpr int kThetaSchemaVersion = 1;

struct ThetaCheckpoint {
  Theta theta;
  double r_bar = 0.0;
  long iterations = 0;
};

inline nlohmann::ordered_json to_json(const ThetaCheckpoint& c) {
  nlohmann::ordered_json j;
  j["schema"] = kThetaSchema;
  j["version"] = kThetaSchemaVersion;
  j["iterations"] = c.iterations;
  j["r_bar"] = c.r_bar;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < kNumParams; ++i) params[param_key(i).name()] = c.theta[i];
  j["params"] = std::move(params);
  return j;
}

inline ThetaCheckpoint checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", std::string{}) != kThetaSchema) {
    throw CheckpointError("theta checkpoint: missing or wrong schema tag");
  }
  if (j.value("version", 0) != kThetaSchemaVersion) throw CheckpointError("theta checkpoint: unsupported version");
  ThetaCheckpoint c;
  c.r_bar = j.value("r_bar", 0.0);
  c.iterations = j.value("iterations", 0L);
  if (!j.contains("params") || !j["params"].is_object()) throw CheckpointError("theta checkpoint: missing params");
  const auto& params = j["params"];
  if (params.size() != kNumParams) throw CheckpointError("theta checkpoint: wrong number of params");
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const auto name = param_key(i).name();
    if (!params.contains(name) || !params[name].is_number()) throw CheckpointError("theta checkpoint: missing param '" + name + "'");
    c.theta[i] = params[name].get<double>();
  }
  if (!c.theta.finite()) throw CheckpointError("theta checkpoint: non-finite value");
  return c;
}

inline void save_checkpoint(const ThetaCheckpoint& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out << to_json(c).dump(2) << '\n';
  if (!out) throw CheckpointError("write failure on checkpoint '" + path + "'");
}

inline ThetaCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError("checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace intentmarl

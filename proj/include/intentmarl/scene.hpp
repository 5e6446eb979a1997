#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cell.hpp"

namespace intentmarl {

class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GoalKind { Building, Entrance, Crossroad, Human };

inline const char* to_string(GoalKind kind) {
  switch (kind) {
    case GoalKind::Building: return "Building";
    case GoalKind::Entrance: return "Entrance";
    case GoalKind::Crossroad: return "Crossroad";
    case GoalKind::Human: return "Human";
  }
  return "?";
}

/// A static target of the scene. Human-track goals are not stored here; they
/// live in the world state for as long as the tracked human is known.
struct GoalInstance {
  std::string id;
  GoalKind kind = GoalKind::Building;
  Cell position;
};

struct Scene {
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<char> road;  // row-major, width * height
  std::vector<GoalInstance> goals;
  double spawn_prob = 0.0;
  double human_building_prob = 1.0;
  double fov_radius = 0.0;
  int robot_speed = 1;
  int human_speed = 1;
  int track_ttl = 10;  // steps a human-track goal survives without a sighting
  std::vector<Cell> robot_starts;

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool on_boundary(Cell c) const {
    return in_bounds(c) && (c.x == 0 || c.y == 0 || c.x == width - 1 || c.y == height - 1);
  }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.x);
  }
  bool is_road(Cell c) const { return in_bounds(c) && road[index(c)] != 0; }

  std::vector<std::size_t> goals_of_kind(GoalKind kind) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < goals.size(); ++i) {
      if (goals[i].kind == kind) out.push_back(i);
    }
    return out;
  }
  std::size_t count(GoalKind kind) const { return goals_of_kind(kind).size(); }

  /// Index of the goal with `id`, or goals.size() when absent.
  std::size_t find_goal(const std::string& id) const {
    for (std::size_t i = 0; i < goals.size(); ++i) {
      if (goals[i].id == id) return i;
    }
    return goals.size();
  }
};

namespace detail {

inline Cell parse_cell(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw SceneError("scene field '" + field + "': expected [x, y] integer pair");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

template <typename T>
T require(const nlohmann::json& doc, const char* field) {
  if (!doc.contains(field)) throw SceneError(std::string("scene field '") + field + "' is missing");
  try {
    return doc.at(field).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SceneError(std::string("scene field '") + field + "' has the wrong type");
  }
}

inline void check_roads_connected(const Scene& scene) {
  std::vector<std::size_t> road_cells;
  for (std::size_t i = 0; i < scene.road.size(); ++i) {
    if (scene.road[i]) road_cells.push_back(i);
  }
  if (road_cells.empty()) throw SceneError("scene field 'roads': no road cells");
  std::vector<char> seen(scene.road.size(), 0);
  std::queue<Cell> frontier;
  const Cell start{static_cast<int>(road_cells.front() % static_cast<std::size_t>(scene.width)),
                   static_cast<int>(road_cells.front() / static_cast<std::size_t>(scene.width))};
  frontier.push(start);
  seen[scene.index(start)] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop();
    for (const Cell d : kNeighbourOffsets) {
      const Cell n{c.x + d.x, c.y + d.y};
      if (scene.is_road(n) && !seen[scene.index(n)]) {
        seen[scene.index(n)] = 1;
        ++reached;
        frontier.push(n);
      }
    }
  }
  if (reached != road_cells.size()) {
    throw SceneError("scene field 'roads': road cells do not form a single connected component");
  }
}

}  // namespace detail

/// Checks every structural invariant; throws SceneError naming the offending field.
inline void validate_scene(const Scene& scene) {
  if (scene.width <= 0 || scene.height <= 0) throw SceneError("scene field 'width'/'height': must be positive");
  if (scene.road.size() != static_cast<std::size_t>(scene.width) * static_cast<std::size_t>(scene.height)) {
    throw SceneError("scene field 'roads': mask size mismatch");
  }
  if (!(scene.spawn_prob >= 0.0 && scene.spawn_prob <= 1.0)) throw SceneError("scene field 'spawn_prob': must lie in [0, 1]");
  if (!(scene.human_building_prob >= 0.0 && scene.human_building_prob <= 1.0)) {
    throw SceneError("scene field 'human_building_prob': must lie in [0, 1]");
  }
  if (!(scene.fov_radius >= 0.0)) throw SceneError("scene field 'fov_radius': must be >= 0");
  if (scene.robot_speed < 1) throw SceneError("scene field 'robot_speed': must be >= 1");
  if (scene.human_speed < 1) throw SceneError("scene field 'human_speed': must be >= 1");
  if (scene.track_ttl < 0) throw SceneError("scene field 'track_ttl': must be >= 0");

  std::set<std::string> ids;
  for (const auto& g : scene.goals) {
    if (!ids.insert(g.id).second) throw SceneError("scene goal id '" + g.id + "' is duplicated");
    if (g.kind == GoalKind::Human) throw SceneError("scene goal '" + g.id + "': human goals are not static");
    if (!scene.in_bounds(g.position)) throw SceneError("scene goal '" + g.id + "': position out of bounds");
    if (g.kind == GoalKind::Entrance && !scene.on_boundary(g.position)) {
      throw SceneError("scene goal '" + g.id + "': entrance must lie on the grid boundary");
    }
    if ((g.kind == GoalKind::Entrance || g.kind == GoalKind::Building) && !scene.is_road(g.position)) {
      throw SceneError("scene goal '" + g.id + "': cell must be a road cell");
    }
  }
  if (scene.count(GoalKind::Building) < 1) throw SceneError("scene field 'buildings': at least one building required");
  if (scene.count(GoalKind::Entrance) < 1) throw SceneError("scene field 'entrances': at least one entrance required");
  for (const Cell c : scene.robot_starts) {
    if (!scene.in_bounds(c)) throw SceneError("scene field 'robot_starts': cell out of bounds");
  }
  detail::check_roads_connected(scene);
}

/// Parses and validates a scene document. Deterministic; no RNG involved.
inline Scene load_scene(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SceneError("scene document must be an object");
  Scene scene;
  scene.name = doc.value("name", std::string{});
  scene.width = detail::require<int>(doc, "width");
  scene.height = detail::require<int>(doc, "height");
  if (scene.width <= 0 || scene.height <= 0) throw SceneError("scene field 'width'/'height': must be positive");
  scene.road.assign(static_cast<std::size_t>(scene.width) * static_cast<std::size_t>(scene.height), 0);

  if (!doc.contains("roads") || !doc["roads"].is_array()) throw SceneError("scene field 'roads' is missing");
  for (const auto& r : doc["roads"]) {
    const Cell c = detail::parse_cell(r, "roads");
    if (!scene.in_bounds(c)) throw SceneError("scene field 'roads': cell out of bounds");
    scene.road[scene.index(c)] = 1;
  }

  auto read_goals = [&](const char* field, const char* cell_key, GoalKind kind, bool required) {
    if (!doc.contains(field)) {
      if (required) throw SceneError(std::string("scene field '") + field + "' is missing");
      return;
    }
    for (const auto& g : doc[field]) {
      if (!g.contains("id") || !g["id"].is_string()) throw SceneError(std::string("scene field '") + field + "': goal without string id");
      if (!g.contains(cell_key)) throw SceneError(std::string("scene field '") + field + "': goal without '" + cell_key + "'");
      scene.goals.push_back({g["id"].get<std::string>(), kind, detail::parse_cell(g[cell_key], field)});
    }
  };
  read_goals("buildings", "door", GoalKind::Building, true);
  read_goals("entrances", "cell", GoalKind::Entrance, true);
  read_goals("crossroads", "cell", GoalKind::Crossroad, false);

  scene.spawn_prob = detail::require<double>(doc, "spawn_prob");
  scene.human_building_prob = detail::require<double>(doc, "human_building_prob");
  scene.fov_radius = detail::require<double>(doc, "fov_radius");
  scene.robot_speed = detail::require<int>(doc, "robot_speed");
  scene.human_speed = detail::require<int>(doc, "human_speed");
  scene.track_ttl = doc.value("track_ttl", 10);
  if (doc.contains("robot_starts")) {
    for (const auto& c : doc["robot_starts"]) scene.robot_starts.push_back(detail::parse_cell(c, "robot_starts"));
  }
  validate_scene(scene);
  return scene;
}

inline Scene load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot open scene file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SceneError("scene file '" + path + "': parse failure: " + e.what());
  }
  return load_scene(doc);
}

}  // namespace intentmarl

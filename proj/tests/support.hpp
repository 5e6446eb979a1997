#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include <intentmarl/intentmarl.hpp>

namespace intentmarl::testing {

inline std::string source_path(const std::string& rel) { return std::string(INTENTMARL_SOURCE_DIR) + "/" + rel; }

// One-row corridor: entrance E at x=0, building B at x=len-1.
inline nlohmann::json corridor_doc(int len) {
  nlohmann::json roads = nlohmann::json::array();
  for (int x = 0; x < len; ++x) roads.push_back({x, 0});
  return {{"name", "corridor"},
          {"width", len},
          {"height", 1},
          {"roads", roads},
          {"buildings", {{{"id", "B"}, {"door", {len - 1, 0}}}}},
          {"entrances", {{{"id", "E"}, {"cell", {0, 0}}}}},
          {"spawn_prob", 0.0},
          {"human_building_prob", 1.0},
          {"fov_radius", 1.0},
          {"robot_speed", 1},
          {"human_speed", 1}};
}

// Plus-shaped roads on a size x size grid (size odd): row and column through the centre.
// Buildings at the four arm midpoints, entrances at the four arm ends.
inline nlohmann::json plus_doc(int size = 11) {
  const int c = size / 2;
  nlohmann::json roads = nlohmann::json::array();
  for (int i = 0; i < size; ++i) {
    roads.push_back({i, c});
    if (i != c) roads.push_back({c, i});
  }
  const int q = c / 2;
  return {{"name", "plus"},
          {"width", size},
          {"height", size},
          {"roads", roads},
          {"buildings",
           {{{"id", "BN"}, {"door", {c, q}}},
            {{"id", "BS"}, {"door", {c, size - 1 - q}}},
            {{"id", "BW"}, {"door", {q, c}}},
            {{"id", "BE"}, {"door", {size - 1 - q, c}}}}},
          {"entrances",
           {{{"id", "EN"}, {"cell", {c, 0}}},
            {{"id", "ES"}, {"cell", {c, size - 1}}},
            {{"id", "EW"}, {"cell", {0, c}}},
            {{"id", "EE"}, {"cell", {size - 1, c}}}}},
          {"crossroads", {{{"id", "C"}, {"cell", {c, c}}}}},
          {"spawn_prob", 0.0},
          {"human_building_prob", 1.0},
          {"fov_radius", 1.5},
          {"robot_speed", 1},
          {"human_speed", 1}};
}

inline std::shared_ptr<const Scene> make_scene(const nlohmann::json& doc) {
  return std::make_shared<const Scene>(load_scene(doc));
}

inline std::shared_ptr<const Scene> train_scene() {
  return std::make_shared<const Scene>(load_scene_file(source_path("scenes/scene_train.json")));
}

inline std::shared_ptr<const Scene> test_scene() {
  return std::make_shared<const Scene>(load_scene_file(source_path("scenes/scene_test.json")));
}

inline std::size_t goal_index(const Scene& s, const std::string& id) { return s.find_goal(id); }
inline GoalRef goal_ref(const Scene& s, const std::string& id) { return static_goal(s, s.find_goal(id)); }

}  // namespace intentmarl::testing

#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cell.hpp"
#include "pathfinding.hpp"
#include "scene.hpp"

namespace intentmarl {

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Reference to a goal: a static scene goal (index into Scene::goals) or a
/// tracked human (index = human id). `hover()` is the stay-in-place sentinel.
struct GoalRef {
  GoalKind kind = GoalKind::Building;
  int index = 0;

  static constexpr GoalRef hover() { return {GoalKind::Human, -1}; }
  static constexpr GoalRef human(int id) { return {GoalKind::Human, id}; }
  constexpr bool is_hover() const { return kind == GoalKind::Human && index < 0; }
  constexpr bool is_human() const { return kind == GoalKind::Human && index >= 0; }

  friend constexpr auto operator<=>(const GoalRef&, const GoalRef&) = default;
};

inline GoalRef static_goal(const Scene& scene, std::size_t i) { return {scene.goals[i].kind, static_cast<int>(i)}; }

inline std::string goal_name(const Scene& scene, GoalRef g) {
  if (g.is_hover()) return "hover";
  if (g.is_human()) return "human:" + std::to_string(g.index);
  return scene.goals[static_cast<std::size_t>(g.index)].id;
}

struct HumanAgent {
  int id = 0;
  Cell position;
  std::size_t goal = 0;  // scene goal index, a Building or an Entrance
  Trajectory path;       // remaining cells, excluding `position`
  bool alive = true;
};

struct RobotAgent {
  int id = 0;
  Cell position;
  GoalRef goal = GoalRef::hover();
  Trajectory position_history;
};

/// Team-shared knowledge about a human that has been seen.
struct TrackedHuman {
  Cell last_seen;
  int last_seen_step = 0;
};

struct ObservedAgent {
  int id = 0;
  Cell position;
};

struct TeamObservation {
  int step = 0;
  std::vector<ObservedAgent> robots;  // always complete
  std::vector<ObservedAgent> humans;  // humans inside any robot's field of view
  std::vector<int> hover_fallback;    // robots whose goal was a lost human this step
};

struct RewardEvent {
  int human_id = 0;
  std::size_t building = 0;
  std::vector<int> observers;
  std::vector<double> per_robot_reward;  // indexed by robot id
};

/// Indices of `positions` within Euclidean `radius` of `center`, boundary inclusive.
inline std::vector<std::size_t> field_of_view(Cell center, double radius, std::span<const Cell> positions) {
  std::vector<std::size_t> out;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double dx = positions[i].x - center.x;
    const double dy = positions[i].y - center.y;
    if (dx * dx + dy * dy <= r2) out.push_back(i);
  }
  return out;
}

inline bool in_view(Cell observer, double radius, Cell target) {
  const double dx = target.x - observer.x;
  const double dy = target.y - observer.y;
  return dx * dx + dy * dy <= radius * radius;
}

/// Splits +1 among the m robots that see `door`, or -1 among all n robots when m = 0.
inline std::vector<double> assign_rewards(Cell door, std::span<const Cell> robot_positions, double fov_radius,
                                          std::vector<int>* observers = nullptr) {
  const std::size_t n = robot_positions.size();
  std::vector<double> reward(n, 0.0);
  std::vector<int> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_view(robot_positions[i], fov_radius, door)) seen.push_back(static_cast<int>(i));
  }
  if (!seen.empty()) {
    const double share = 1.0 / static_cast<double>(seen.size());
    for (const int i : seen) reward[static_cast<std::size_t>(i)] = share;
  } else if (n > 0) {
    std::fill(reward.begin(), reward.end(), -1.0 / static_cast<double>(n));
  }
  if (observers) *observers = std::move(seen);
  return reward;
}

/// Draws this step's arrivals: with probability spawn_prob one human at a
/// uniform entrance heading to a uniform building (probability
/// human_building_prob) or to a uniform different entrance.
inline std::vector<HumanAgent> spawn_humans(const Scene& scene, Rng& rng, PathPlanner& planner, int& next_id) {
  std::vector<HumanAgent> out;
  if (uniform01(rng) >= scene.spawn_prob) return out;
  const auto entrances = scene.goals_of_kind(GoalKind::Entrance);
  const auto buildings = scene.goals_of_kind(GoalKind::Building);
  const std::size_t origin = entrances[uniform_index(rng, entrances.size())];
  std::size_t goal = 0;
  if (uniform01(rng) < scene.human_building_prob) {
    goal = buildings[uniform_index(rng, buildings.size())];
  } else {
    if (entrances.size() < 2) return out;
    std::vector<std::size_t> others;
    for (const auto e : entrances) {
      if (e != origin) others.push_back(e);
    }
    goal = others[uniform_index(rng, others.size())];
  }
  auto path = planner.path(AgentType::Human, scene.goals[origin].position, scene.goals[goal].position);
  if (!path) return out;
  HumanAgent h;
  h.id = next_id++;
  h.position = scene.goals[origin].position;
  h.goal = goal;
  h.path.assign(path->begin() + 1, path->end());
  out.push_back(std::move(h));
  return out;
}

/// Whole simulation state of one run. Copyable; owns its path cache.
class WorldState {
 public:
  WorldState(std::shared_ptr<const Scene> scene, int n_robots) : scene_(std::move(scene)), planner_(*scene_) {
    const Cell centre{scene_->width / 2, scene_->height / 2};
    for (int i = 0; i < n_robots; ++i) {
      RobotAgent r;
      r.id = i;
      r.position = scene_->robot_starts.empty()
                       ? centre
                       : scene_->robot_starts[static_cast<std::size_t>(i) % scene_->robot_starts.size()];
      r.position_history.push_back(r.position);
      robots_.push_back(std::move(r));
    }
  }

  WorldState(const WorldState& o) : scene_(o.scene_), planner_(*scene_), step_(o.step_), next_human_id_(o.next_human_id_),
                                    humans_(o.humans_), robots_(o.robots_), tracked_(o.tracked_) {}
  WorldState& operator=(const WorldState& o) {
    if (this != &o) *this = WorldState(o);
    return *this;
  }
  WorldState(WorldState&&) noexcept = default;
  WorldState& operator=(WorldState&&) noexcept = default;

  const Scene& scene() const { return *scene_; }
  const std::shared_ptr<const Scene>& scene_ptr() const { return scene_; }
  int step_count() const { return step_; }
  const std::vector<HumanAgent>& humans() const { return humans_; }
  const std::vector<RobotAgent>& robots() const { return robots_; }
  const std::map<int, TrackedHuman>& tracked() const { return tracked_; }
  PathPlanner& planner() { return planner_; }

  std::vector<Cell> robot_positions() const {
    std::vector<Cell> out;
    out.reserve(robots_.size());
    for (const auto& r : robots_) out.push_back(r.position);
    return out;
  }

  /// A human-track goal is live while the human exists and was seen within track_ttl steps.
  bool goal_live(GoalRef g) const {
    if (g.is_hover()) return true;
    if (!g.is_human()) return g.index >= 0 && static_cast<std::size_t>(g.index) < scene_->goals.size();
    const auto it = tracked_.find(g.index);
    return it != tracked_.end() && human_alive(g.index) && track_fresh(it->second);
  }

  std::optional<Cell> goal_position(GoalRef g) const {
    if (g.is_hover()) return std::nullopt;
    if (g.is_human()) {
      const auto it = tracked_.find(g.index);
      if (it == tracked_.end()) return std::nullopt;
      return it->second.last_seen;
    }
    return scene_->goals[static_cast<std::size_t>(g.index)].position;
  }

  /// Goals a robot may pursue now: every static target plus live human tracks.
  std::vector<GoalRef> robot_feasible_goals() const {
    std::vector<GoalRef> out;
    for (std::size_t i = 0; i < scene_->goals.size(); ++i) out.push_back(static_goal(*scene_, i));
    for (const auto& [id, t] : tracked_) {
      if (goal_live(GoalRef::human(id))) out.push_back(GoalRef::human(id));
    }
    return out;
  }

  /// Goals a human may pursue: buildings and entrances.
  std::vector<GoalRef> human_feasible_goals() const {
    std::vector<GoalRef> out;
    for (std::size_t i = 0; i < scene_->goals.size(); ++i) {
      const auto k = scene_->goals[i].kind;
      if (k == GoalKind::Building || k == GoalKind::Entrance) out.push_back(static_goal(*scene_, i));
    }
    return out;
  }

  TeamObservation observe() const {
    TeamObservation obs;
    obs.step = step_;
    for (const auto& r : robots_) obs.robots.push_back({r.id, r.position});
    for (const auto& h : humans_) {
      if (!h.alive) continue;
      for (const auto& r : robots_) {
        if (in_view(r.position, scene_->fov_radius, h.position)) {
          obs.humans.push_back({h.id, h.position});
          break;
        }
      }
    }
    return obs;
  }

  struct StepResult {
    TeamObservation observation;
    std::vector<RewardEvent> events;
  };

  /// Advances one tick: humans move and enter or leave, arrivals spawn, robots
  /// move toward `robot_goals`, the team observes, and entry rewards are assigned.
  StepResult step(std::span<const GoalRef> robot_goals, Rng& rng) {
    ++step_;
    const Scene& sc = *scene_;

    struct Entry {
      int human_id;
      std::size_t building;
    };
    std::vector<Entry> entries;
    for (auto& h : humans_) {
      const auto n = std::min<std::size_t>(static_cast<std::size_t>(sc.human_speed), h.path.size());
      if (n > 0) {
        h.position = h.path[n - 1];
        h.path.erase(h.path.begin(), h.path.begin() + static_cast<std::ptrdiff_t>(n));
      }
      if (h.path.empty()) {
        h.alive = false;
        if (sc.goals[h.goal].kind == GoalKind::Building) entries.push_back({h.id, h.goal});
      }
    }
    std::erase_if(humans_, [](const HumanAgent& h) { return !h.alive; });

    for (auto& h : spawn_humans(sc, rng, planner_, next_human_id_)) humans_.push_back(std::move(h));

    std::vector<int> fallback;
    for (std::size_t i = 0; i < robots_.size(); ++i) {
      auto& r = robots_[i];
      GoalRef g = i < robot_goals.size() ? robot_goals[i] : r.goal;
      if (!goal_live(g)) {
        g = GoalRef::hover();
        fallback.push_back(r.id);
      }
      r.goal = g;
      if (const auto target = goal_position(g)) {
        r.position = planner_.advance(AgentType::Robot, r.position, *target, sc.robot_speed);
      }
      r.position_history.push_back(r.position);
      if (r.position_history.size() > 2 * kHistoryCap) {
        r.position_history.erase(r.position_history.begin(),
                                 r.position_history.end() - static_cast<std::ptrdiff_t>(kHistoryCap));
      }
    }

    StepResult out;
    out.observation = observe();
    out.observation.hover_fallback = std::move(fallback);
    for (const auto& h : out.observation.humans) tracked_[h.id] = {h.position, step_};
    std::erase_if(tracked_, [&](const auto& kv) { return !human_alive(kv.first) || !track_fresh(kv.second); });

    const auto positions = robot_positions();
    for (const auto& e : entries) {
      RewardEvent ev;
      ev.human_id = e.human_id;
      ev.building = e.building;
      ev.per_robot_reward = assign_rewards(sc.goals[e.building].position, positions, sc.fov_radius, &ev.observers);
      out.events.push_back(std::move(ev));
    }
    return out;
  }

  // Test hook: place a human directly.
  void add_human(HumanAgent h) {
    next_human_id_ = std::max(next_human_id_, h.id + 1);
    humans_.push_back(std::move(h));
  }
  void set_robot_position(std::size_t i, Cell c) { robots_[i].position = c; }

 private:
  static constexpr std::size_t kHistoryCap = 256;

  bool human_alive(int id) const {
    return std::any_of(humans_.begin(), humans_.end(), [id](const HumanAgent& h) { return h.id == id && h.alive; });
  }
  bool track_fresh(const TrackedHuman& t) const {
    const int unseen = step_ - t.last_seen_step;
    return unseen == 0 || unseen < scene_->track_ttl;
  }

  std::shared_ptr<const Scene> scene_;
  PathPlanner planner_;
  int step_ = 0;
  int next_human_id_ = 0;
  std::vector<HumanAgent> humans_;
  std::vector<RobotAgent> robots_;
  std::map<int, TrackedHuman> tracked_;
};

/// Total reward received by robot `robot_id` from a step's events.
inline double robot_reward(std::span<const RewardEvent> events, int robot_id) {
  double r = 0.0;
  for (const auto& e : events) r += e.per_robot_reward[static_cast<std::size_t>(robot_id)];
  return r;
}

}  // namespace intentmarl

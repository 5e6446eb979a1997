#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "cell.hpp"
#include "scene.hpp"

namespace intentmarl {

inline bool passable(const Scene& scene, AgentType type, Cell c) {
  return type == AgentType::Robot ? scene.in_bounds(c) : scene.is_road(c);
}

/// Breadth-first step counts to a fixed target over the cells passable for one agent type.
class DistanceField {
 public:
  static constexpr int kUnreachable = -1;

  DistanceField(const Scene& scene, AgentType type, Cell target)
      : width_(scene.width), dist_(static_cast<std::size_t>(scene.width) * static_cast<std::size_t>(scene.height), kUnreachable) {
    if (!passable(scene, type, target)) return;
    std::queue<Cell> frontier;
    dist_[scene.index(target)] = 0;
    frontier.push(target);
    while (!frontier.empty()) {
      const Cell c = frontier.front();
      frontier.pop();
      const int next = dist_[scene.index(c)] + 1;
      for (const Cell d : kNeighbourOffsets) {
        const Cell n{c.x + d.x, c.y + d.y};
        if (passable(scene, type, n) && dist_[scene.index(n)] == kUnreachable) {
          dist_[scene.index(n)] = next;
          frontier.push(n);
        }
      }
    }
  }

  int at(Cell c) const {
    if (c.x < 0 || c.y < 0 || c.x >= width_) return kUnreachable;
    const auto i = static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x);
    return i < dist_.size() ? dist_[i] : kUnreachable;
  }

  /// Minimal-step path from `from` to the target. From each cell the first
  /// neighbour (up, down, left, right) one step closer is taken, so the path
  /// from any cell on it is exactly its own suffix.
  std::optional<Trajectory> path_from(Cell from) const {
    int d = at(from);
    if (d == kUnreachable) return std::nullopt;
    Trajectory path;
    path.reserve(static_cast<std::size_t>(d) + 1);
    path.push_back(from);
    Cell cur = from;
    while (d > 0) {
      for (const Cell off : kNeighbourOffsets) {
        const Cell n{cur.x + off.x, cur.y + off.y};
        if (at(n) == d - 1) {
          cur = n;
          break;
        }
      }
      --d;
      path.push_back(cur);
    }
    return path;
  }

 private:
  int width_;
  std::vector<int> dist_;
};

/// Shortest path for an agent of `type`; std::nullopt when `to` is unreachable
/// or either endpoint is impassable.
inline std::optional<Trajectory> shortest_path(const Scene& scene, Cell from, Cell to, AgentType type = AgentType::Human) {
  if (!passable(scene, type, from)) return std::nullopt;
  return DistanceField(scene, type, to).path_from(from);
}

/// Per-run cache of distance fields keyed by (agent type, target cell).
class PathPlanner {
 public:
  explicit PathPlanner(const Scene& scene) : scene_(&scene) {}

  const DistanceField& field(AgentType type, Cell target) {
    const std::uint64_t key = (static_cast<std::uint64_t>(type == AgentType::Human) << 40) |
                              (static_cast<std::uint64_t>(static_cast<std::uint32_t>(target.y)) << 20) |
                              static_cast<std::uint64_t>(static_cast<std::uint32_t>(target.x));
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      if (cache_.size() >= kMaxEntries) cache_.clear();
      it = cache_.emplace(key, DistanceField(*scene_, type, target)).first;
    }
    return it->second;
  }

  std::optional<Trajectory> path(AgentType type, Cell from, Cell to) {
    if (!passable(*scene_, type, from)) return std::nullopt;
    return field(type, to).path_from(from);
  }

  /// Position after moving up to `steps` cells toward `to`; stays put when unreachable.
  Cell advance(AgentType type, Cell from, Cell to, int steps) {
    const DistanceField& f = field(type, to);
    int d = f.at(from);
    if (d == DistanceField::kUnreachable) return from;
    Cell cur = from;
    for (int s = 0; s < steps && d > 0; ++s, --d) {
      for (const Cell off : kNeighbourOffsets) {
        const Cell n{cur.x + off.x, cur.y + off.y};
        if (f.at(n) == d - 1) {
          cur = n;
          break;
        }
      }
    }
    return cur;
  }

  const Scene& scene() const { return *scene_; }

 private:
  static constexpr std::size_t kMaxEntries = 4096;
  const Scene* scene_;
  std::unordered_map<std::uint64_t, DistanceField> cache_;
};

}  // namespace intentmarl

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdlib>
#include <vector>

namespace intentmarl {

/// Integer grid coordinate. `y` grows downward, so "up" is y - 1.
struct Cell {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

/// Time-ordered cell sequence with unit time spacing.
using Trajectory = std::vector<Cell>;

inline double euclidean(Cell a, Cell b) {
  const long dx = a.x - b.x;
  const long dy = a.y - b.y;
  return std::sqrt(static_cast<double>(dx * dx + dy * dy));
}

inline int chebyshev(Cell a, Cell b) {
  return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

inline int manhattan(Cell a, Cell b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

/// Movement class of an agent. Humans walk on roads; robots fly over the whole grid.
enum class AgentType { Robot, Human };

inline const char* to_string(AgentType type) { return type == AgentType::Robot ? "Robot" : "Human"; }

// Neighbour order used for every deterministic tie-break: up, down, left, right.
inline constexpr Cell kNeighbourOffsets[4] = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};

}  // namespace intentmarl

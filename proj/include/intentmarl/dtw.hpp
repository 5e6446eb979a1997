#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "cell.hpp"

namespace intentmarl {

/// Dynamic time warping distance between two cell sequences.
///
/// Per-pair cost is the Euclidean distance between cells; the step pattern is
/// {(1,0), (0,1), (1,1)} with no band constraint. Returns the cumulative cost
/// of the optimal monotone alignment. Both sequences must be nonempty.
inline double dtw_distance(std::span<const Cell> a, std::span<const Cell> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("dtw_distance: empty trajectory");
  const std::size_t m = b.size();
  // Two rolling rows over b.
  std::vector<double> prev(m), cur(m);
  prev[0] = euclidean(a[0], b[0]);
  for (std::size_t j = 1; j < m; ++j) prev[j] = prev[j - 1] + euclidean(a[0], b[j]);
  for (std::size_t i = 1; i < a.size(); ++i) {
    cur[0] = prev[0] + euclidean(a[i], b[0]);
    for (std::size_t j = 1; j < m; ++j) {
      cur[j] = euclidean(a[i], b[j]) + std::min({prev[j], prev[j - 1], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

}  // namespace intentmarl

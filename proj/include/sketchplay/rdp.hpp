#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sketchplay/error.hpp"
#include "sketchplay/geometry.hpp"

namespace sketchplay {

/// Ramer-Douglas-Peucker simplification. Keeps both endpoints; every dropped
/// point lies within `epsilon` of the segment that replaced it. Iterative so
/// long captured strokes cannot overflow the stack.
inline std::vector<Point> rdp_simplify(std::span<const Point> points, double epsilon) {
  if (epsilon < 0.0) throw Error(ErrorCode::InvalidInput, "epsilon must be non-negative");
  if (points.size() < 3 || epsilon == 0.0) return {points.begin(), points.end()};

  std::vector<bool> keep(points.size(), false);
  keep.front() = keep.back() = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, points.size() - 1}};
  while (!stack.empty()) {
    const auto [first, last] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    std::size_t index = first;
    for (std::size_t i = first + 1; i < last; ++i) {
      const double d = point_segment_distance(points[i], points[first], points[last]);
      if (d > worst) {
        worst = d;
        index = i;
      }
    }
    if (worst > epsilon) {
      keep[index] = true;
      if (index - first > 1) stack.emplace_back(first, index);
      if (last - index > 1) stack.emplace_back(index, last);
    }
  }

  std::vector<Point> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (keep[i]) out.push_back(points[i]);
  return out;
}

}  // namespace sketchplay

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace sketchplay {

/// A 2D position. In the canvas frame units are millimeters with the origin
/// at the top-left corner, x to the right and y downward; the same type is
/// reused for camera and projector pixels.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Euclidean distance from `p` to the closed segment [a, b].
inline double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return distance(p, a);
  const Point ap = p - a;
  const double t = std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

inline double point_polyline_distance(Point p, std::span<const Point> line) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return distance(p, line.front());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < line.size(); ++i)
    best = std::min(best, point_segment_distance(p, line[i - 1], line[i]));
  return best;
}

inline double arc_length(std::span<const Point> line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) total += distance(line[i - 1], line[i]);
  return total;
}

/// Points spaced at most `step` apart along the polyline, endpoints included.
inline std::vector<Point> densify(std::span<const Point> line, double step) {
  std::vector<Point> out;
  if (line.empty()) return out;
  out.push_back(line.front());
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double len = distance(line[i - 1], line[i]);
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int k = 1; k <= pieces; ++k) {
      const double t = static_cast<double>(k) / pieces;
      out.push_back(line[i - 1] + t * (line[i] - line[i - 1]));
    }
  }
  return out;
}

/// Directed Hausdorff distance: how far `from` strays from `to`.
inline double directed_hausdorff(std::span<const Point> from, std::span<const Point> to,
                                 double sample_step = 0.25) {
  double worst = 0.0;
  for (const Point& p : densify(from, sample_step))
    worst = std::max(worst, point_polyline_distance(p, to));
  return worst;
}

inline double hausdorff(std::span<const Point> a, std::span<const Point> b,
                        double sample_step = 0.25) {
  return std::max(directed_hausdorff(a, b, sample_step), directed_hausdorff(b, a, sample_step));
}

}  // namespace sketchplay

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sketchplay/geometry.hpp"
#include "sketchplay/homography.hpp"
#include "sketchplay/raster.hpp"
#include "sketchplay/sketch.hpp"

namespace sketchplay {

/// Paint colors used for synthetic renders and exports.
inline Rgb channel_color(PlayerChannel c) {
  switch (c) {
    case PlayerChannel::Black: return {20, 20, 20};
    case PlayerChannel::Red: return {200, 30, 30};
    case PlayerChannel::Green: return {30, 160, 60};
    case PlayerChannel::Blue: return {30, 60, 200};
  }
  return {0, 0, 0};
}

namespace detail {

/// Calls paint(x, y) for every pixel whose centre lies within `radius` of
/// the polyline. Pixel (x, y) has its centre at integer coordinates.
template <typename Paint>
void stamp_polyline(const std::vector<Point>& px, double radius, std::size_t w, std::size_t h, Paint&& paint) {
  if (px.empty()) return;
  auto visit = [&](Point a, Point b) {
    const long x0 = std::max(0L, static_cast<long>(std::floor(std::min(a.x, b.x) - radius)));
    const long x1 = std::min(static_cast<long>(w) - 1, static_cast<long>(std::ceil(std::max(a.x, b.x) + radius)));
    const long y0 = std::max(0L, static_cast<long>(std::floor(std::min(a.y, b.y) - radius)));
    const long y1 = std::min(static_cast<long>(h) - 1, static_cast<long>(std::ceil(std::max(a.y, b.y) + radius)));
    for (long y = y0; y <= y1; ++y)
      for (long x = x0; x <= x1; ++x)
        if (point_segment_distance({static_cast<double>(x), static_cast<double>(y)}, a, b) <= radius)
          paint(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  };
  if (px.size() == 1) visit(px[0], px[0]);
  for (std::size_t i = 1; i < px.size(); ++i) visit(px[i - 1], px[i]);
}

inline std::vector<Point> map_points(const Homography& h, const std::vector<Point>& pts) {
  std::vector<Point> out;
  out.reserve(pts.size());
  for (const Point& p : pts) out.push_back(map_point(h, p));
  return out;
}

}  // namespace detail

/// Draws the sketch in its channel colors, without anti-aliasing, onto a
/// white raster. `canvas_to_px` maps canvas millimeters to pixels.
inline Raster render_sketch(const Sketch& s, const Homography& canvas_to_px, std::size_t width, std::size_t height,
                            double stroke_px = 3.0) {
  Raster out(width, height);
  for (const auto& st : s.strokes) {
    const Rgb c = channel_color(st.channel);
    detail::stamp_polyline(detail::map_points(canvas_to_px, st.points), stroke_px / 2.0, width, height,
                           [&](std::size_t x, std::size_t y) { out.put(x, y, c); });
  }
  return out;
}

/// Opaque strokes of the given color on a transparent frame.
inline RgbaImage render_overlay(const Sketch& s, const Homography& canvas_to_px, std::size_t width, std::size_t height,
                                Rgb color = channel_color(PlayerChannel::Blue), double stroke_px = 3.0) {
  RgbaImage out(width, height);
  const Rgba c{color[0], color[1], color[2], 255};
  for (const auto& st : s.strokes)
    detail::stamp_polyline(detail::map_points(canvas_to_px, st.points), stroke_px / 2.0, width, height,
                           [&](std::size_t x, std::size_t y) { out.put(x, y, c); });
  return out;
}

}  // namespace sketchplay

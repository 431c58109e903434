#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchplay/error.hpp"
#include "sketchplay/geometry.hpp"
#include "sketchplay/homography.hpp"

namespace sketchplay {

/// Color identity of a contributor. Black holds the theme, Red and Green are
/// the two humans, Blue is reserved for the machine.
enum class PlayerChannel { Black, Red, Green, Blue };

inline constexpr std::array<PlayerChannel, 4> kAllChannels = {
    PlayerChannel::Black, PlayerChannel::Red, PlayerChannel::Green, PlayerChannel::Blue};

inline std::string_view to_string(PlayerChannel c) {
  switch (c) {
    case PlayerChannel::Black: return "black";
    case PlayerChannel::Red: return "red";
    case PlayerChannel::Green: return "green";
    case PlayerChannel::Blue: return "blue";
  }
  return "black";
}

inline std::optional<PlayerChannel> parse_channel(std::string_view s) {
  for (PlayerChannel c : kAllChannels)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

inline std::size_t channel_index(PlayerChannel c) { return static_cast<std::size_t>(c); }

struct Stroke {
  std::vector<Point> points;
  PlayerChannel channel = PlayerChannel::Black;

  friend bool operator==(const Stroke&, const Stroke&) = default;
};

struct CanvasSize {
  double width = 1100.0;
  double height = 1600.0;

  friend bool operator==(const CanvasSize&, const CanvasSize&) = default;
};

/// Ordered strokes on a canvas. The default canvas is a 110 x 160 cm sheet.
struct Sketch {
  std::vector<Stroke> strokes;
  CanvasSize canvas;

  bool empty() const { return strokes.empty(); }
  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& s : strokes) n += s.points.size();
    return n;
  }

  friend bool operator==(const Sketch&, const Sketch&) = default;
};

inline bool valid_canvas(CanvasSize c) {
  return std::isfinite(c.width) && std::isfinite(c.height) && c.width > 0.0 && c.height > 0.0;
}

inline bool within_canvas(Point p, CanvasSize c) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= c.width && p.y <= c.height;
}

/// Throws InvalidInput when the canvas is empty or a point is non-finite or
/// outside the canvas.
inline void validate_sketch(const Sketch& s) {
  if (!valid_canvas(s.canvas)) throw Error(ErrorCode::InvalidInput, "sketch canvas size is empty");
  for (std::size_t i = 0; i < s.strokes.size(); ++i) {
    if (s.strokes[i].points.empty())
      throw Error(ErrorCode::InvalidInput, "stroke " + std::to_string(i) + " has no points");
    for (const Point& p : s.strokes[i].points) {
      if (!is_finite(p))
        throw Error(ErrorCode::InvalidInput, "stroke " + std::to_string(i) + " has a non-finite point");
      if (!within_canvas(p, s.canvas))
        throw Error(ErrorCode::InvalidInput, "stroke " + std::to_string(i) + " leaves the canvas");
    }
  }
}

/// Merges runs of identical consecutive points.
inline std::vector<Point> merge_duplicates(std::vector<Point> pts) {
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

inline Sketch merge_duplicates(Sketch s) {
  for (auto& stroke : s.strokes) stroke.points = merge_duplicates(std::move(stroke.points));
  return s;
}

inline Point clamp_to_canvas(Point p, CanvasSize c) {
  return {std::clamp(p.x, 0.0, c.width), std::clamp(p.y, 0.0, c.height)};
}

/// Applies `map` to every point. Channels and stroke structure are kept; the
/// canvas size is carried over unchanged.
inline Sketch transform_sketch(const Sketch& sketch, const Homography& map) {
  if (std::abs(map.determinant()) <= 1e-12)
    throw Error(ErrorCode::InvalidInput, "transform map is not invertible");
  Sketch out = sketch;
  for (auto& stroke : out.strokes)
    for (auto& p : stroke.points) p = map_point(map, p);
  return out;
}

inline std::vector<Stroke> strokes_of(const Sketch& s, PlayerChannel c) {
  std::vector<Stroke> out;
  std::copy_if(s.strokes.begin(), s.strokes.end(), std::back_inserter(out),
               [c](const Stroke& st) { return st.channel == c; });
  return out;
}

// JSON: {canvas: [w, h], strokes: [{channel: "red", points: [[x, y], ...]}]}

inline nlohmann::json to_json(const Stroke& s) {
  nlohmann::json pts = nlohmann::json::array();
  for (const Point& p : s.points) pts.push_back({p.x, p.y});
  return {{"channel", std::string(to_string(s.channel))}, {"points", std::move(pts)}};
}

inline nlohmann::json to_json(const Sketch& s) {
  nlohmann::json strokes = nlohmann::json::array();
  for (const auto& st : s.strokes) strokes.push_back(to_json(st));
  return {{"canvas", {s.canvas.width, s.canvas.height}}, {"strokes", std::move(strokes)}};
}

inline Stroke stroke_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("points") || !j["points"].is_array())
    throw Error(ErrorCode::Parse, "stroke must be an object with a points array");
  Stroke s;
  const std::string ch = j.value("channel", std::string("black"));
  const auto parsed = parse_channel(ch);
  if (!parsed) throw Error(ErrorCode::Parse, "unknown channel '" + ch + "'");
  s.channel = *parsed;
  for (const auto& p : j["points"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw Error(ErrorCode::Parse, "point must be [x, y]");
    s.points.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  if (s.points.empty()) throw Error(ErrorCode::Parse, "stroke has no points");
  return s;
}

/// Parses the sketch JSON. A missing canvas falls back to `default_canvas`.
inline Sketch sketch_from_json(const nlohmann::json& j, CanvasSize default_canvas = {}) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "sketch must be a JSON object");
  Sketch s;
  s.canvas = default_canvas;
  if (j.contains("canvas")) {
    const auto& c = j["canvas"];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
      throw Error(ErrorCode::Parse, "canvas must be [width, height]");
    s.canvas = {c[0].get<double>(), c[1].get<double>()};
  }
  if (j.contains("strokes")) {
    if (!j["strokes"].is_array()) throw Error(ErrorCode::Parse, "strokes must be an array");
    for (const auto& st : j["strokes"]) s.strokes.push_back(stroke_from_json(st));
  }
  return s;
}

}  // namespace sketchplay

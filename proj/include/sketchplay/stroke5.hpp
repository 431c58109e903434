#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchplay/error.hpp"
#include "sketchplay/sketch.hpp"

namespace sketchplay {

/// Pen state after reaching a point. Stored as an enum so the one-hot
/// constraint of the five-column encoding cannot be violated.
enum class Pen { Down = 0, Up = 1, End = 2 };

/// One step of the model-facing encoding: offset from the previous point plus
/// the pen state once the point is reached.
struct Stroke5Row {
  double dx = 0.0;
  double dy = 0.0;
  Pen pen = Pen::Down;

  std::array<double, 5> as_array() const {
    return {dx, dy, pen == Pen::Down ? 1.0 : 0.0, pen == Pen::Up ? 1.0 : 0.0,
            pen == Pen::End ? 1.0 : 0.0};
  }

  static Stroke5Row end() { return {0.0, 0.0, Pen::End}; }
  static Stroke5Row start() { return {0.0, 0.0, Pen::Down}; }

  friend bool operator==(const Stroke5Row&, const Stroke5Row&) = default;
};

inline Stroke5Row row_from_array(const std::array<double, 5>& a) {
  int hot = 0;
  Pen pen = Pen::Down;
  for (int k = 0; k < 3; ++k) {
    const double v = a[static_cast<std::size_t>(2 + k)];
    if (v != 0.0 && v != 1.0) throw Error(ErrorCode::InvalidInput, "pen flags must be 0 or 1");
    if (v == 1.0) {
      ++hot;
      pen = static_cast<Pen>(k);
    }
  }
  if (hot != 1) throw Error(ErrorCode::InvalidInput, "exactly one pen flag must be set");
  return {a[0], a[1], pen};
}

inline nlohmann::json rows_to_json(const std::vector<Stroke5Row>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) out.push_back(r.as_array());
  return out;
}

inline std::vector<Stroke5Row> rows_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::Parse, "rows must be an array");
  std::vector<Stroke5Row> rows;
  rows.reserve(j.size());
  for (const auto& r : j) {
    if (!r.is_array() || r.size() != 5) throw Error(ErrorCode::Parse, "row must have 5 entries");
    rows.push_back(row_from_array(r.get<std::array<double, 5>>()));
  }
  return rows;
}

/// True when every row after the first End is also a zero-offset End.
inline bool valid_rows(const std::vector<Stroke5Row>& rows) {
  bool ended = false;
  for (const auto& r : rows) {
    if (!std::isfinite(r.dx) || !std::isfinite(r.dy)) return false;
    if (ended && !(r.pen == Pen::End && r.dx == 0.0 && r.dy == 0.0)) return false;
    if (r.pen == Pen::End) ended = true;
  }
  return true;
}

namespace detail {

inline std::size_t encoded_length(const Stroke& s, bool first) {
  return s.points.size() + ((first && s.points.size() == 1) ? 1 : 0);
}

}  // namespace detail

/// Encodes a sketch as offsets with pen flags. Row 0 is the start token
/// (0, 0, down) standing on the first point; the last point of every stroke
/// carries Up; a single End row terminates. Whole trailing strokes are
/// dropped so that the output never exceeds `max_len` rows. An empty sketch
/// encodes as a lone End row.
///
/// Consecutive duplicate points must already be merged: a zero offset with
/// the pen down is how a single-point first stroke is closed.
inline std::vector<Stroke5Row> to_stroke5(const Sketch& sketch, std::size_t max_len) {
  if (!valid_canvas(sketch.canvas)) throw Error(ErrorCode::InvalidInput, "canvas size is empty");
  if (max_len < 2) throw Error(ErrorCode::InvalidInput, "max_len must be at least 2");

  std::size_t kept = 0;
  std::size_t used = 1;  // end token
  for (std::size_t i = 0; i < sketch.strokes.size(); ++i) {
    const std::size_t n = detail::encoded_length(sketch.strokes[i], i == 0);
    if (sketch.strokes[i].points.empty())
      throw Error(ErrorCode::InvalidInput, "stroke " + std::to_string(i) + " has no points");
    if (used + n > max_len) break;
    used += n;
    ++kept;
  }

  std::vector<Stroke5Row> rows;
  rows.reserve(used);
  Point prev{};
  for (std::size_t i = 0; i < kept; ++i) {
    const auto& pts = sketch.strokes[i].points;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const bool last = k + 1 == pts.size();
      if (i == 0 && k == 0) {
        rows.push_back(Stroke5Row::start());
        if (last) rows.push_back({0.0, 0.0, Pen::Up});
      } else {
        rows.push_back({pts[k].x - prev.x, pts[k].y - prev.y, last ? Pen::Up : Pen::Down});
      }
      prev = pts[k];
    }
  }
  rows.push_back(Stroke5Row::end());
  return rows;
}

struct DecodedSketch {
  Sketch sketch;
  /// Set when the rows ran out before an End row.
  bool missing_end = false;
};

/// Walks rows from `origin`, starting a stroke wherever the pen was lifted.
/// `pen_down_at_origin` says whether `origin` itself is the first point of
/// an open stroke (true for a start-token-led sequence).
inline DecodedSketch decode_rows(const std::vector<Stroke5Row>& rows, Point origin,
                                 PlayerChannel channel, bool pen_down_at_origin,
                                 CanvasSize canvas = {}) {
  DecodedSketch out;
  out.sketch.canvas = canvas;
  Stroke current{{}, channel};
  if (pen_down_at_origin) current.points.push_back(origin);
  Point pos = origin;
  bool pen_down = pen_down_at_origin;
  bool ended = false;

  auto close = [&] {
    if (!current.points.empty()) out.sketch.strokes.push_back(current);
    current.points.clear();
  };

  for (const auto& r : rows) {
    if (r.pen == Pen::End) {
      ended = true;
      break;
    }
    const bool moved = r.dx != 0.0 || r.dy != 0.0;
    pos = {pos.x + r.dx, pos.y + r.dy};
    if (!pen_down || moved || current.points.empty()) current.points.push_back(pos);
    pen_down = r.pen == Pen::Down;
    if (!pen_down) close();
  }
  close();
  out.missing_end = !ended;
  return out;
}

/// Inverse of to_stroke5 given the first point of the original sketch.
/// Decoding stops at the first End row; a sequence without one is closed
/// implicitly and flagged.
inline DecodedSketch from_stroke5(const std::vector<Stroke5Row>& rows, Point origin,
                                  PlayerChannel channel, CanvasSize canvas = {}) {
  if (rows.empty() || rows.front().pen == Pen::End) {
    DecodedSketch out;
    out.sketch.canvas = canvas;
    out.missing_end = rows.empty();
    return out;
  }
  // Row 0 is the start token standing on `origin`.
  std::vector<Stroke5Row> rest(rows.begin() + 1, rows.end());
  const bool down = rows.front().pen == Pen::Down;
  DecodedSketch out = decode_rows(rest, origin, channel, down, canvas);
  if (!down) {
    // A first row that lifts the pen is a single-point stroke at the origin.
    out.sketch.strokes.insert(out.sketch.strokes.begin(), Stroke{{origin}, channel});
  }
  return out;
}

struct NormalizedRows {
  std::vector<Stroke5Row> rows;
  double scale = 1.0;
};

/// Population standard deviation of the pooled non-zero offset components,
/// or 1 when it vanishes.
inline double offset_scale(const std::vector<const std::vector<Stroke5Row>*>& sets) {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  for (const auto* rows : sets)
    for (const auto& r : *rows)
      for (double v : {r.dx, r.dy}) {
        if (v == 0.0) continue;
        n += 1.0;
        const double delta = v - mean;
        mean += delta / n;
        m2 += delta * (v - mean);
      }
  if (n < 1.0) return 1.0;
  const double sd = std::sqrt(m2 / n);
  return sd > 0.0 && std::isfinite(sd) ? sd : 1.0;
}

inline std::vector<Stroke5Row> scale_offsets(std::vector<Stroke5Row> rows, double factor) {
  for (auto& r : rows) {
    r.dx *= factor;
    r.dy *= factor;
  }
  return rows;
}

/// Divides offsets by their spread; `scale` maps normalized offsets back.
inline NormalizedRows normalize_offsets(const std::vector<Stroke5Row>& rows) {
  const double s = offset_scale({&rows});
  if (s == 1.0) return {rows, 1.0};
  return {scale_offsets(rows, 1.0 / s), s};
}

}  // namespace sketchplay

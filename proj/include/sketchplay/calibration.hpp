#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sketchplay/clock.hpp"
#include "sketchplay/error.hpp"
#include "sketchplay/geometry.hpp"
#include "sketchplay/homography.hpp"
#include "sketchplay/raster.hpp"
#include "sketchplay/render.hpp"
#include "sketchplay/vision.hpp"

namespace sketchplay {

enum class Frame { Camera, Canvas, Projector };

inline std::string to_string(Frame f) {
  switch (f) {
    case Frame::Camera: return "camera";
    case Frame::Canvas: return "canvas";
    case Frame::Projector: return "projector";
  }
  return "?";
}

inline Frame parse_frame(const std::string& s) {
  if (s == "camera") return Frame::Camera;
  if (s == "canvas") return Frame::Canvas;
  if (s == "projector") return Frame::Projector;
  throw Error(ErrorCode::InvalidInput, "unknown frame '" + s + "'");
}

struct Correspondence {
  Point source;
  Point destination;
};

struct CalibrationSet {
  Frame from = Frame::Camera;
  Frame to = Frame::Canvas;
  std::vector<Correspondence> pairs;
};

namespace detail {

inline double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

/// First (i, j, k) in lexicographic order whose points are collinear
/// relative to the spread of the whole set.
inline std::optional<std::array<std::size_t, 3>> collinear_triple(const std::vector<Point>& pts) {
  double extent = 0.0;
  for (const Point& p : pts)
    for (const Point& q : pts) extent = std::max(extent, distance(p, q));
  const double tol = 1e-9 * extent * extent;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (std::size_t k = j + 1; k < pts.size(); ++k)
        if (std::abs(cross(pts[i], pts[j], pts[k])) <= tol) return std::array<std::size_t, 3>{i, j, k};
  return std::nullopt;
}

/// Similarity taking the points to zero mean and mean distance sqrt(2).
inline Eigen::Matrix3d hartley(const std::vector<Point>& pts) {
  double mx = 0, my = 0;
  for (const Point& p : pts) mx += p.x, my += p.y;
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double mean_dist = 0;
  for (const Point& p : pts) mean_dist += std::hypot(p.x - mx, p.y - my);
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * mx, 0, s, -s * my, 0, 0, 1;
  return t;
}

inline Point apply(const Eigen::Matrix3d& t, Point p) {
  const Eigen::Vector3d v = t * Eigen::Vector3d(p.x, p.y, 1.0);
  return {v(0) / v(2), v(1) / v(2)};
}

[[noreturn]] inline void throw_degenerate(const std::vector<Point>& src) {
  if (auto t = collinear_triple(src))
    throw Error(ErrorCode::Degenerate,
                "degenerate correspondences: source points " + std::to_string((*t)[0]) + ", " +
                    std::to_string((*t)[1]) + " and " + std::to_string((*t)[2]) + " are collinear",
                std::to_string((*t)[0]) + "," + std::to_string((*t)[1]) + "," + std::to_string((*t)[2]));
  throw Error(ErrorCode::Degenerate, "degenerate correspondences: the map is not determined");
}

}  // namespace detail

/// Least-squares direct linear transform on Hartley-normalized points. Exact
/// for four noise-free correspondences in general position.
inline Homography solve_homography(const CalibrationSet& set) {
  const auto& pairs = set.pairs;
  if (pairs.size() < 4)
    throw Error(ErrorCode::InvalidInput,
                "at least 4 correspondences are required, got " + std::to_string(pairs.size()));
  std::vector<Point> src, dst;
  for (const auto& c : pairs) {
    if (!is_finite(c.source) || !is_finite(c.destination))
      throw Error(ErrorCode::InvalidInput, "correspondence has a non-finite coordinate");
    src.push_back(c.source);
    dst.push_back(c.destination);
  }
  if (pairs.size() == 4 && detail::collinear_triple(src)) detail::throw_degenerate(src);

  const Eigen::Matrix3d ts = detail::hartley(src), td = detail::hartley(dst);
  // At least 9 rows so the SVD reports all nine singular values.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(std::max<std::size_t>(9, 2 * pairs.size())), 9);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Point p = detail::apply(ts, src[i]);
    const Point q = detail::apply(td, dst[i]);
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
    a.row(r + 1) << p.x, p.y, 1, 0, 0, 0, -q.x * p.x, -q.x * p.y, -q.x;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A well-posed problem leaves exactly one direction unconstrained.
  if (sv(7) <= 1e-9 * sv(0)) detail::throw_degenerate(src);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = td.inverse() * hn * ts;
  try {
    return Homography::from_eigen(full);
  } catch (const Error&) {
    detail::throw_degenerate(src);
  }
}

inline double reprojection_rmse(const Homography& h, const CalibrationSet& set) {
  if (set.pairs.empty()) throw Error(ErrorCode::InvalidInput, "reprojection error needs at least one correspondence");
  double acc = 0.0;
  for (const auto& c : set.pairs) {
    const Point p = map_point(h, c.source);
    const double d = distance(p, c.destination);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(set.pairs.size()));
}

// ---------------------------------------------------------------------------
// Marker grid

struct MarkerPattern {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double radius = 0.0;
  /// Marker centres in projector pixels, row-major.
  std::vector<Point> points;
};

/// n disc markers on a grid inset 10% from each edge. Rows follow the
/// aspect ratio; the last row may be partial. Markers must stay at least
/// four radii apart.
inline MarkerPattern marker_pattern(std::size_t n, std::size_t width, std::size_t height) {
  if (n < 4) throw Error(ErrorCode::InvalidInput, "marker pattern needs at least 4 markers, got " + std::to_string(n));
  if (width == 0 || height == 0) throw Error(ErrorCode::InvalidInput, "projector size must be positive");
  MarkerPattern m;
  m.width = width;
  m.height = height;
  const double w = static_cast<double>(width), h = static_cast<double>(height);
  m.rows = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(std::sqrt(n * h / w))));
  m.cols = std::max<std::size_t>(2, (n + m.rows - 1) / m.rows);
  m.radius = std::min(w, h) / 40.0;
  const double x0 = 0.1 * w, y0 = 0.1 * h;
  const double dx = 0.8 * w / static_cast<double>(m.cols - 1);
  const double dy = 0.8 * h / static_cast<double>(m.rows - 1);
  if (std::min(dx, dy) < 4.0 * m.radius)
    throw Error(ErrorCode::InvalidInput, std::to_string(n) + " markers exceed the grid capacity of a " +
                                             std::to_string(width) + "x" + std::to_string(height) + " frame");
  for (std::size_t i = 0; i < n; ++i)
    m.points.push_back({std::round(x0 + dx * static_cast<double>(i % m.cols)),
                        std::round(y0 + dy * static_cast<double>(i / m.cols))});
  return m;
}

/// Black discs on white, in projector pixels.
inline Raster render_marker_pattern(const MarkerPattern& m) {
  Sketch s;
  for (const Point& p : m.points) s.strokes.push_back({{p}, PlayerChannel::Black});
  Raster out = render_sketch(s, Homography::identity(), m.width, m.height, 2.0 * m.radius);
  return out;
}

/// Finds `expected` black disc markers in a capture and returns their
/// centres in the same row-major order as marker_pattern: sorted by y,
/// split into rows of `cols`, each row sorted by x.
inline std::vector<Point> detect_markers(const Raster& capture, std::size_t expected, std::size_t cols,
                                         const ColorPalette& palette = {}, std::size_t min_area = 20) {
  const auto masks = classify_channels(flat_field_correct(capture), palette);
  auto blobs = detect_blobs(masks[PlayerChannel::Black], min_area);
  if (blobs.size() != expected)
    throw Error(ErrorCode::InvalidInput, "expected " + std::to_string(expected) + " markers, found " +
                                             std::to_string(blobs.size()));
  std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) { return a.centroid.y < b.centroid.y; });
  std::vector<Point> out;
  for (std::size_t start = 0; start < blobs.size(); start += cols) {
    const auto end = blobs.begin() + static_cast<std::ptrdiff_t>(std::min(blobs.size(), start + cols));
    std::sort(blobs.begin() + static_cast<std::ptrdiff_t>(start), end,
              [](const Blob& a, const Blob& b) { return a.centroid.x < b.centroid.x; });
    for (auto it = blobs.begin() + static_cast<std::ptrdiff_t>(start); it != end; ++it) out.push_back(it->centroid);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frames

/// Maps among the camera, canvas and projector frames. Stores
/// camera->canvas and canvas->projector; every other direction is composed
/// when a map is set.
class FrameGraph {
 public:
  FrameGraph() { rebuild(); }

  void set(Frame from, Frame to, const Homography& h) {
    if (from == to) throw Error(ErrorCode::InvalidInput, "a frame map needs two distinct frames");
    if (from == Frame::Camera && to == Frame::Canvas) camera_to_canvas_ = h;
    else if (from == Frame::Canvas && to == Frame::Camera) camera_to_canvas_ = h.inverse();
    else if (from == Frame::Canvas && to == Frame::Projector) canvas_to_projector_ = h;
    else if (from == Frame::Projector && to == Frame::Canvas) canvas_to_projector_ = h.inverse();
    else if (from == Frame::Camera && to == Frame::Projector)
      canvas_to_projector_ = h.after(camera_to_canvas_.inverse());
    else canvas_to_projector_ = h.inverse().after(camera_to_canvas_.inverse());
    rebuild();
  }

  const Homography& get(Frame from, Frame to) const { return maps_.at({from, to}); }

 private:
  void rebuild() {
    const Homography& cc = camera_to_canvas_;
    const Homography& cp = canvas_to_projector_;
    maps_.clear();
    maps_.emplace(std::pair{Frame::Camera, Frame::Camera}, Homography::identity());
    maps_.emplace(std::pair{Frame::Canvas, Frame::Canvas}, Homography::identity());
    maps_.emplace(std::pair{Frame::Projector, Frame::Projector}, Homography::identity());
    maps_.emplace(std::pair{Frame::Camera, Frame::Canvas}, cc);
    maps_.emplace(std::pair{Frame::Canvas, Frame::Camera}, cc.inverse());
    maps_.emplace(std::pair{Frame::Canvas, Frame::Projector}, cp);
    maps_.emplace(std::pair{Frame::Projector, Frame::Canvas}, cp.inverse());
    maps_.emplace(std::pair{Frame::Camera, Frame::Projector}, cp.after(cc));
    maps_.emplace(std::pair{Frame::Projector, Frame::Camera}, cp.after(cc).inverse());
  }

  Homography camera_to_canvas_;
  Homography canvas_to_projector_;
  std::map<std::pair<Frame, Frame>, Homography> maps_;
};

struct Calibration {
  FrameGraph frames;
  /// Reprojection rmse of each solved map, keyed "from->to".
  std::map<std::string, double> rmse;
  std::string timestamp;
};

inline std::string map_key(Frame from, Frame to) { return to_string(from) + "->" + to_string(to); }

/// Correspondence file: {"sets": [{"from": "camera", "to": "canvas",
/// "pairs": [[[sx, sy], [dx, dy]], ...]}, ...]}.
inline std::vector<CalibrationSet> correspondences_from_json(const nlohmann::json& j) {
  std::vector<CalibrationSet> out;
  try {
    for (const auto& s : j.at("sets")) {
      CalibrationSet set;
      set.from = parse_frame(s.at("from").get<std::string>());
      set.to = parse_frame(s.at("to").get<std::string>());
      for (const auto& p : s.at("pairs")) {
        const auto a = p.at(0).get<std::array<double, 2>>();
        const auto b = p.at(1).get<std::array<double, 2>>();
        set.pairs.push_back({{a[0], a[1]}, {b[0], b[1]}});
      }
      out.push_back(std::move(set));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("correspondence file: ") + e.what());
  }
  if (out.empty()) throw Error(ErrorCode::InvalidInput, "correspondence file has no sets");
  return out;
}

/// Solves each set and installs it in a fresh frame graph.
inline Calibration calibrate(const std::vector<CalibrationSet>& sets, std::string timestamp = utc_timestamp()) {
  Calibration c;
  for (const auto& s : sets) {
    const Homography h = solve_homography(s);
    c.frames.set(s.from, s.to, h);
    c.rmse[map_key(s.from, s.to)] = reprojection_rmse(h, s);
  }
  c.timestamp = std::move(timestamp);
  return c;
}

inline nlohmann::json to_json(const Calibration& c) {
  nlohmann::json matrices = nlohmann::json::object();
  for (auto [a, b] : {std::pair{Frame::Camera, Frame::Canvas}, std::pair{Frame::Canvas, Frame::Projector},
                      std::pair{Frame::Camera, Frame::Projector}})
    matrices[map_key(a, b)] = c.frames.get(a, b).row_major();
  return {{"frames", {"camera", "canvas", "projector"}},
          {"matrices", matrices},
          {"rmse", c.rmse},
          {"timestamp", c.timestamp}};
}

inline Calibration calibration_from_json(const nlohmann::json& j) {
  Calibration c;
  try {
    const auto& m = j.at("matrices");
    for (auto [a, b] : {std::pair{Frame::Camera, Frame::Canvas}, std::pair{Frame::Canvas, Frame::Projector}}) {
      const auto key = map_key(a, b);
      if (m.contains(key)) c.frames.set(a, b, Homography(m.at(key).get<std::array<double, 9>>()));
    }
    if (j.contains("rmse")) c.rmse = j.at("rmse").get<std::map<std::string, double>>();
    c.timestamp = j.value("timestamp", "");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("calibration file: ") + e.what());
  }
  return c;
}

inline Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open calibration file " + path.string());
  try {
    return calibration_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, "calibration file " + path.string() + ": " + e.what());
  }
}

}  // namespace sketchplay

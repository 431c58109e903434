#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchplay/error.hpp"
#include "sketchplay/geometry.hpp"
#include "sketchplay/homography.hpp"
#include "sketchplay/png_io.hpp"
#include "sketchplay/raster.hpp"
#include "sketchplay/rdp.hpp"
#include "sketchplay/render.hpp"
#include "sketchplay/sketch.hpp"

namespace sketchplay {

// ---------------------------------------------------------------------------
// Illumination

namespace detail {

/// Sliding max (or min) over windows of radius r, truncated at the borders.
/// Runs along `n` samples spaced `stride` apart starting at `base`.
template <typename Better>
void sliding_extreme(const std::vector<float>& in, std::vector<float>& out, std::size_t base, std::size_t stride,
                     std::size_t n, std::size_t r, Better better) {
  std::deque<std::size_t> q;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hi = std::min(n - 1, i + r);
    for (; next <= hi; ++next) {
      while (!q.empty() && !better(in[base + q.back() * stride], in[base + next * stride])) q.pop_back();
      q.push_back(next);
    }
    while (q.front() + r < i) q.pop_front();
    out[base + i * stride] = in[base + q.front() * stride];
  }
}

template <typename Better>
std::vector<float> extreme_filter(const std::vector<float>& plane, std::size_t w, std::size_t h, std::size_t r,
                                  Better better) {
  std::vector<float> tmp(plane.size()), out(plane.size());
  for (std::size_t y = 0; y < h; ++y) sliding_extreme(plane, tmp, y * w, 1, w, r, better);
  for (std::size_t x = 0; x < w; ++x) sliding_extreme(tmp, out, x, w, h, r, better);
  return out;
}

inline void sliding_mean(const std::vector<float>& in, std::vector<float>& out, std::size_t base, std::size_t stride,
                         std::size_t n, std::size_t r) {
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + in[base + i * stride];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= r ? i - r : 0;
    const std::size_t hi = std::min(n - 1, i + r);
    out[base + i * stride] = static_cast<float>((prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1));
  }
}

inline std::vector<float> box_blur(const std::vector<float>& plane, std::size_t w, std::size_t h, std::size_t r) {
  std::vector<float> tmp(plane.size()), out(plane.size());
  for (std::size_t y = 0; y < h; ++y) sliding_mean(plane, tmp, y * w, 1, w, r);
  for (std::size_t x = 0; x < w; ++x) sliding_mean(tmp, out, x, w, h, r);
  return out;
}

}  // namespace detail

/// Side of the square background window: at least an eighth of the smaller
/// image dimension, at least 15, always odd.
inline std::size_t flat_field_window(std::size_t width, std::size_t height) {
  std::size_t w = std::max<std::size_t>(15, (std::min(width, height) + 7) / 8);
  if (w % 2 == 0) ++w;
  return w;
}

/// Divides each channel by its background estimate (grayscale closing to
/// erase dark ink, then a box blur) and rescales so background maps to 255.
inline Raster flat_field_correct(const Raster& img) {
  validate_raster(img);
  const std::size_t w = img.width, h = img.height, n = w * h;
  const std::size_t r = flat_field_window(w, h) / 2;
  Raster out = img;
  std::vector<float> plane(n);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) plane[i] = img.pixels[3 * i + c];
    const auto dilated = detail::extreme_filter(plane, w, h, r, [](float a, float b) { return a > b; });
    const auto closed = detail::extreme_filter(dilated, w, h, r, [](float a, float b) { return a < b; });
    const auto bg = detail::box_blur(closed, w, h, r);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = 255.0 * plane[i] / std::max(1.0f, bg[i]);
      out.pixels[3 * i + c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Color classification

struct Hsv {
  double h = 0.0;  // degrees in [0, 360)
  double s = 0.0;
  double v = 0.0;
};

inline Hsv to_hsv(Rgb c) {
  const double r = c[0] / 255.0, g = c[1] / 255.0, b = c[2] / 255.0;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0 ? d / mx : 0.0;
  if (d > 0) {
    if (mx == r) out.h = 60.0 * std::fmod((g - b) / d + 6.0, 6.0);
    else if (mx == g) out.h = 60.0 * ((b - r) / d + 2.0);
    else out.h = 60.0 * ((r - g) / d + 4.0);
  }
  return out;
}

inline double hue_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

struct ColorPalette {
  /// Indexed by PlayerChannel.
  std::array<Rgb, 4> reference{channel_color(PlayerChannel::Black), channel_color(PlayerChannel::Red),
                               channel_color(PlayerChannel::Green), channel_color(PlayerChannel::Blue)};
  Rgb background{255, 255, 255};
  double black_max_value = 0.45;
  double black_max_saturation = 0.4;
  double min_saturation = 0.35;
  double min_value = 0.2;
  double hue_tolerance = 40.0;

  void validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidInput, "palette: " + m); };
    if (!(hue_tolerance > 0 && hue_tolerance < 180)) bad("hue tolerance must be in (0, 180)");
    const Hsv k = to_hsv(reference[0]);
    if (k.v > black_max_value || k.s > black_max_saturation) bad("black reference is not classified as black");
    for (std::size_t i = 1; i < 4; ++i) {
      const Hsv a = to_hsv(reference[i]);
      if (a.s < min_saturation || a.v < min_value) bad(std::string(to_string(kAllChannels[i])) + " reference is not chromatic");
      for (std::size_t j = i + 1; j < 4; ++j)
        if (hue_distance(a.h, to_hsv(reference[j]).h) <= 2 * hue_tolerance)
          bad(std::string(to_string(kAllChannels[i])) + " and " + std::string(to_string(kAllChannels[j])) +
              " hues are closer than twice the tolerance");
    }
    const Hsv bg = to_hsv(background);
    if (bg.v <= black_max_value || bg.s >= min_saturation) bad("background must be light and unsaturated");
  }

  /// Channel for one corrected pixel, or nothing for background.
  std::optional<PlayerChannel> classify(Rgb c) const {
    const Hsv p = to_hsv(c);
    if (p.v <= black_max_value && p.s <= black_max_saturation) return PlayerChannel::Black;
    if (p.s < min_saturation || p.v < min_value) return std::nullopt;
    std::optional<PlayerChannel> best;
    double best_d = hue_tolerance;
    for (std::size_t i = 1; i < 4; ++i) {
      const double d = hue_distance(p.h, to_hsv(reference[i]).h);
      if (d <= best_d) {
        best_d = d;
        best = kAllChannels[i];
      }
    }
    return best;
  }
};

inline nlohmann::json to_json(const ColorPalette& p) {
  nlohmann::json refs;
  for (auto c : kAllChannels) refs[std::string(to_string(c))] = p.reference[channel_index(c)];
  return {{"reference", refs},
          {"background", p.background},
          {"black_max_value", p.black_max_value},
          {"black_max_saturation", p.black_max_saturation},
          {"min_saturation", p.min_saturation},
          {"min_value", p.min_value},
          {"hue_tolerance", p.hue_tolerance}};
}

/// Overrides on top of the defaults; absent fields keep their default.
inline ColorPalette palette_from_json(const nlohmann::json& j) {
  ColorPalette p;
  try {
    if (j.contains("reference"))
      for (const auto& [name, rgb] : j.at("reference").items()) {
        const auto c = parse_channel(name);
        if (!c) throw Error(ErrorCode::InvalidInput, "palette: unknown channel " + name);
        p.reference[channel_index(*c)] = rgb.get<Rgb>();
      }
    if (j.contains("background")) p.background = j.at("background").get<Rgb>();
    if (j.contains("black_max_value")) p.black_max_value = j.at("black_max_value").get<double>();
    if (j.contains("black_max_saturation")) p.black_max_saturation = j.at("black_max_saturation").get<double>();
    if (j.contains("min_saturation")) p.min_saturation = j.at("min_saturation").get<double>();
    if (j.contains("min_value")) p.min_value = j.at("min_value").get<double>();
    if (j.contains("hue_tolerance")) p.hue_tolerance = j.at("hue_tolerance").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("palette: ") + e.what());
  }
  p.validate();
  return p;
}

/// One mask per PlayerChannel; a pixel is set in at most one of them.
struct ChannelMasks {
  std::array<Mask, 4> masks;

  const Mask& operator[](PlayerChannel c) const { return masks[channel_index(c)]; }
  Mask& operator[](PlayerChannel c) { return masks[channel_index(c)]; }
};

inline ChannelMasks classify_channels(const Raster& img, const ColorPalette& palette) {
  validate_raster(img);
  ChannelMasks out;
  for (auto& m : out.masks) m = Mask(img.width, img.height);
  for (std::size_t i = 0; i < img.width * img.height; ++i)
    if (auto c = palette.classify(img.get(i))) out[*c].bits[i] = 1;
  return out;
}

// ---------------------------------------------------------------------------
// Thinning

/// Zhang-Suen thinning run to a fixpoint, so applying it twice changes
/// nothing. Uses the Lu-Wang neighbor-count bound (3 <= B <= 6): with the
/// original lower bound of 2, two-pixel-thick diagonal runs, which every
/// 45 degree stroke passes through, are erased entirely.
inline Mask skeletonize(const Mask& in) {
  Mask m = in;
  const long w = static_cast<long>(m.width), h = static_cast<long>(m.height);
  std::vector<std::size_t> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int step = 0; step < 2; ++step) {
      doomed.clear();
      for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
          if (!m.get(x, y)) continue;
          // p2..p9 clockwise from north.
          const int p[8] = {m.get(x, y - 1),     m.get(x + 1, y - 1), m.get(x + 1, y), m.get(x + 1, y + 1),
                            m.get(x, y + 1),     m.get(x - 1, y + 1), m.get(x - 1, y), m.get(x - 1, y - 1)};
          int b = 0, a = 0;
          for (int k = 0; k < 8; ++k) {
            b += p[k];
            a += (p[k] == 0 && p[(k + 1) % 8] == 1);
          }
          if (b < 3 || b > 6 || a != 1) continue;
          const int n = p[0], e = p[2], s = p[4], wst = p[6];
          const bool ok = step == 0 ? (n * e * s == 0 && e * s * wst == 0) : (n * e * wst == 0 && n * s * wst == 0);
          if (ok) doomed.push_back(static_cast<std::size_t>(y) * m.width + static_cast<std::size_t>(x));
        }
      for (auto i : doomed) m.bits[i] = 0;
      if (!doomed.empty()) changed = true;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Tracing

struct TraceOptions {
  /// RDP tolerance in pixels.
  double rdp_epsilon_px = 1.0;
  /// Branches from an endpoint to a junction this short or shorter (in
  /// pixels) are thinning artifacts and get removed before tracing.
  std::size_t spur_px = 3;
};

namespace detail {

struct Pixel {
  long x = 0;
  long y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

inline bool row_major_less(Pixel a, Pixel b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); }

/// Skeleton graph under m-adjacency: a diagonal step counts only when
/// neither of the two pixels sharing an edge with both ends is set. This
/// keeps staircase corners from looking like junctions.
class SkeletonGraph {
 public:
  explicit SkeletonGraph(Mask m) : m_(std::move(m)) {}

  bool on(Pixel p) const { return m_.get(p.x, p.y); }
  void erase(Pixel p) { m_.put(static_cast<std::size_t>(p.x), static_cast<std::size_t>(p.y), false); }
  const Mask& mask() const { return m_; }

  std::vector<Pixel> neighbors(Pixel p) const {
    static constexpr int kOrder[8][2] = {{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}};
    std::vector<Pixel> out;
    for (const auto& d : kOrder) {
      const Pixel q{p.x + d[0], p.y + d[1]};
      if (!on(q)) continue;
      if (d[0] != 0 && d[1] != 0 && (m_.get(p.x + d[0], p.y) || m_.get(p.x, p.y + d[1]))) continue;
      out.push_back(q);
    }
    return out;
  }
  std::size_t degree(Pixel p) const { return neighbors(p).size(); }

 private:
  Mask m_;
};

inline void prune_spurs(SkeletonGraph& g, std::size_t max_len) {
  if (max_len == 0) return;
  const Mask& m = g.mask();
  std::vector<std::vector<Pixel>> spurs;
  for (long y = 0; y < static_cast<long>(m.height); ++y)
    for (long x = 0; x < static_cast<long>(m.width); ++x) {
      const Pixel start{x, y};
      if (!g.on(start) || g.degree(start) != 1) continue;
      std::vector<Pixel> branch{start};
      Pixel prev = start, cur = g.neighbors(start)[0];
      bool hits_junction = false;
      while (branch.size() <= max_len) {
        const auto nb = g.neighbors(cur);
        if (nb.size() >= 3) {
          hits_junction = true;
          break;
        }
        if (nb.size() != 2) break;
        branch.push_back(cur);
        const Pixel next = nb[0] == prev ? nb[1] : nb[0];
        prev = cur;
        cur = next;
      }
      if (hits_junction && branch.size() <= max_len) spurs.push_back(std::move(branch));
    }
  for (const auto& s : spurs)
    for (Pixel p : s) g.erase(p);
}

/// Thinning eats into stroke ends. Moves the tip of `pts` (front or back)
/// outward along the stroke direction to where the ink of `support` ends,
/// less half the ink width measured across the tip, so the tip lands on the
/// centre of the round cap.
inline void restore_tip(std::vector<Point>& pts, bool front, const Mask& support) {
  if (pts.size() < 2) return;
  if (front) std::reverse(pts.begin(), pts.end());
  const Point tip = pts.back();
  const Point inner = pts[pts.size() - 1 - std::min<std::size_t>(5, pts.size() - 1)];
  const double len = distance(tip, inner);
  if (len > 0) {
    const Point dir = (1.0 / len) * (tip - inner);
    const Point perp{-dir.y, dir.x};
    auto inked = [&](Point p) { return support.get(std::lround(p.x), std::lround(p.y)); };
    auto reach = [&](Point d) {
      double t = 0;
      while (t < 64 && inked(tip + (t + 0.25) * d)) t += 0.25;
      return t;
    };
    const double half_width = (reach(perp) + reach(-1.0 * perp)) / 2.0;
    const double ahead = reach(dir) - half_width;
    if (ahead > 0) pts.push_back(tip + ahead * dir);
  }
  if (front) std::reverse(pts.begin(), pts.end());
}

}  // namespace detail

/// Splits a skeleton into polylines. Paths run between endpoints and
/// junction pixels (degree 3 or more); closed loops start at their first
/// pixel in row-major order. Each open path starts at its row-major smaller
/// end, and strokes are sorted by their start pixel. Points are
/// RDP-simplified in pixels, then mapped through `px_to_mm`. With the
/// unthinned `support` mask, free ends are pushed back out to the ink tips.
inline std::vector<Stroke> trace_strokes(const Mask& skeleton, const Homography& px_to_mm,
                                         PlayerChannel channel = PlayerChannel::Black, const TraceOptions& opts = {},
                                         const Mask* support = nullptr) {
  using detail::Pixel;
  detail::SkeletonGraph g(skeleton);
  detail::prune_spurs(g, opts.spur_px);

  const std::size_t w = skeleton.width, h = skeleton.height;
  std::vector<std::uint8_t> visited(w * h, 0);
  auto idx = [&](Pixel p) { return static_cast<std::size_t>(p.y) * w + static_cast<std::size_t>(p.x); };
  std::vector<std::vector<Pixel>> paths;

  auto walk = [&](Pixel start, Pixel next) {
    std::vector<Pixel> path{start};
    Pixel prev = start, cur = next;
    while (true) {
      path.push_back(cur);
      if (cur == start) break;
      const auto nb = g.neighbors(cur);
      if (nb.size() != 2) {
        if (nb.size() < 3) visited[idx(cur)] = 1;
        break;
      }
      visited[idx(cur)] = 1;
      const Pixel n = nb[0] == prev ? nb[1] : nb[0];
      prev = cur;
      cur = n;
    }
    paths.push_back(std::move(path));
  };

  auto for_each_pixel = [&](auto&& fn) {
    for (long y = 0; y < static_cast<long>(h); ++y)
      for (long x = 0; x < static_cast<long>(w); ++x)
        if (g.on({x, y})) fn(Pixel{x, y});
  };

  for_each_pixel([&](Pixel p) {
    if (visited[idx(p)] || g.degree(p) != 1) return;
    visited[idx(p)] = 1;
    walk(p, g.neighbors(p)[0]);
  });
  for_each_pixel([&](Pixel p) {
    if (g.degree(p) < 3) return;
    for (Pixel n : g.neighbors(p))
      if (g.degree(n) < 3 && !visited[idx(n)]) walk(p, n);
  });
  for_each_pixel([&](Pixel p) {
    if (visited[idx(p)]) return;
    const auto nb = g.neighbors(p);
    if (nb.empty()) {
      visited[idx(p)] = 1;
      paths.push_back({p});
    } else if (nb.size() == 2) {
      visited[idx(p)] = 1;
      walk(p, nb[0]);
    }
  });

  for (auto& path : paths)
    if (path.size() > 1 && path.front() != path.back() && detail::row_major_less(path.back(), path.front()))
      std::reverse(path.begin(), path.end());
  std::stable_sort(paths.begin(), paths.end(), [](const auto& a, const auto& b) {
    if (a.front() != b.front()) return detail::row_major_less(a.front(), b.front());
    return detail::row_major_less(a.back(), b.back());
  });

  std::vector<Stroke> out;
  out.reserve(paths.size());
  for (const auto& path : paths) {
    std::vector<Point> pts;
    pts.reserve(path.size());
    for (Pixel p : path) pts.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
    if (support && path.size() > 1 && path.front() != path.back()) {
      if (g.degree(path.front()) == 1) detail::restore_tip(pts, true, *support);
      if (g.degree(path.back()) == 1) detail::restore_tip(pts, false, *support);
    }
    Stroke s{{}, channel};
    for (const Point& p : rdp_simplify(pts, opts.rdp_epsilon_px)) s.points.push_back(map_point(px_to_mm, p));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline

struct VisionOptions {
  TraceOptions trace;
  /// When set, corrected image and per-channel masks and skeletons are
  /// written here as PNGs.
  std::optional<std::filesystem::path> debug_dir;
};

/// Capture to strokes of every channel, sorted by start pixel then channel.
inline Sketch vectorize(const Raster& capture, const ColorPalette& palette, const Homography& px_to_mm,
                        CanvasSize canvas, const VisionOptions& opts = {}) {
  palette.validate();
  const Raster corrected = flat_field_correct(capture);
  const ChannelMasks masks = classify_channels(corrected, palette);
  if (opts.debug_dir) write_png(*opts.debug_dir / "corrected.png", corrected);

  struct Keyed {
    Point start_px;
    std::size_t channel;
    Stroke stroke;
  };
  std::vector<Keyed> all;
  const Homography mm_to_px = px_to_mm.inverse();
  for (auto c : kAllChannels) {
    const Mask skel = skeletonize(masks[c]);
    if (opts.debug_dir) {
      write_png(*opts.debug_dir / ("mask_" + std::string(to_string(c)) + ".png"), masks[c]);
      write_png(*opts.debug_dir / ("skeleton_" + std::string(to_string(c)) + ".png"), skel);
    }
    for (auto& s : trace_strokes(skel, px_to_mm, c, opts.trace, &masks[c])) {
      const Point p = map_point(mm_to_px, s.points.front());
      all.push_back({{std::round(p.x), std::round(p.y)}, channel_index(c), std::move(s)});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.start_px.y, a.start_px.x, a.channel) < std::tie(b.start_px.y, b.start_px.x, b.channel);
  });
  Sketch out;
  out.canvas = canvas;
  for (auto& k : all) out.strokes.push_back(std::move(k.stroke));
  return out;
}

/// Strokes in `capture` not already present in `prev`: a detected stroke is
/// dropped when it lies within `tolerance_mm` (directed Hausdorff) of a
/// same-channel stroke of `prev`.
inline Sketch extract_new_strokes(const Sketch& prev, const Raster& capture, const ColorPalette& palette,
                                  const Homography& px_to_mm, double tolerance_mm = 3.0,
                                  const VisionOptions& opts = {}) {
  Sketch all = vectorize(capture, palette, px_to_mm, prev.canvas, opts);
  Sketch out;
  out.canvas = prev.canvas;
  for (auto& s : all.strokes) {
    bool known = false;
    for (const auto& old : prev.strokes)
      if (old.channel == s.channel && directed_hausdorff(s.points, old.points) <= tolerance_mm) {
        known = true;
        break;
      }
    if (!known) out.strokes.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Blobs

struct Blob {
  Point centroid;
  std::size_t area = 0;
};

/// 8-connected components of `mask` with at least `min_area` pixels, in
/// row-major order of their first pixel.
inline std::vector<Blob> detect_blobs(const Mask& mask, std::size_t min_area = 1) {
  std::vector<Blob> out;
  std::vector<std::uint8_t> seen(mask.bits.size(), 0);
  std::vector<std::size_t> stack;
  const long w = static_cast<long>(mask.width), h = static_cast<long>(mask.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (!mask.bits[i] || seen[i]) continue;
    seen[i] = 1;
    stack.assign(1, i);
    double sx = 0, sy = 0;
    std::size_t n = 0;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      const long x = static_cast<long>(k % mask.width), y = static_cast<long>(k / mask.width);
      sx += static_cast<double>(x);
      sy += static_cast<double>(y);
      ++n;
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          const long nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny * w + nx);
          if (mask.bits[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
    }
    if (n >= min_area) out.push_back({{sx / static_cast<double>(n), sy / static_cast<double>(n)}, n});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Artist archives

struct ArchiveFailure {
  std::size_t index = 0;
  std::string message;
};

struct ArchiveResult {
  /// One entry per capture; empty for captures that failed.
  std::vector<std::optional<Sketch>> sketches;
  std::vector<ArchiveFailure> failures;
};

/// Vectorizes every capture independently. A failing capture is recorded
/// and skipped; the rest of the batch still runs.
template <typename Source>
ArchiveResult ingest_artist_archive(const std::vector<Source>& captures, const Homography& px_to_mm,
                                    const ColorPalette& palette, CanvasSize canvas, const VisionOptions& opts = {}) {
  ArchiveResult out;
  for (std::size_t i = 0; i < captures.size(); ++i) {
    try {
      if constexpr (std::is_same_v<Source, Raster>) {
        out.sketches.push_back(vectorize(captures[i], palette, px_to_mm, canvas, opts));
      } else {
        out.sketches.push_back(vectorize(read_png(captures[i]), palette, px_to_mm, canvas, opts));
      }
    } catch (const std::exception& e) {
      out.sketches.push_back(std::nullopt);
      out.failures.push_back({i, e.what()});
    }
  }
  return out;
}

}  // namespace sketchplay

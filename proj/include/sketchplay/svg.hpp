#pragma once

#include <cstdio>
#include <string>

#include "sketchplay/render.hpp"
#include "sketchplay/sketch.hpp"

namespace sketchplay {

namespace detail {

inline std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s == "-0" ? "0" : s;
}

inline std::string svg_hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

}  // namespace detail

/// One polyline per stroke in canvas millimeters, colored by channel.
/// Single-point strokes become dots.
inline std::string to_svg(const Sketch& s, double stroke_mm = 1.0) {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::svg_number(s.canvas.width) +
                    "mm\" height=\"" + detail::svg_number(s.canvas.height) + "mm\" viewBox=\"0 0 " +
                    detail::svg_number(s.canvas.width) + " " + detail::svg_number(s.canvas.height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& st : s.strokes) {
    const std::string color = detail::svg_hex(channel_color(st.channel));
    const std::string channel(to_string(st.channel));
    if (st.points.size() == 1) {
      out += "<circle class=\"" + channel + "\" cx=\"" + detail::svg_number(st.points[0].x) + "\" cy=\"" +
             detail::svg_number(st.points[0].y) + "\" r=\"" + detail::svg_number(stroke_mm / 2) + "\" fill=\"" +
             color + "\"/>\n";
      continue;
    }
    out += "<polyline class=\"" + channel + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
           detail::svg_number(stroke_mm) + "\" stroke-linecap=\"round\" stroke-linejoin=\"round\" points=\"";
    for (std::size_t i = 0; i < st.points.size(); ++i) {
      if (i) out += ' ';
      out += detail::svg_number(st.points[i].x) + "," + detail::svg_number(st.points[i].y);
    }
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace sketchplay

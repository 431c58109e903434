#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sketchplay/error.hpp"

namespace sketchplay {

using Rgb = std::array<std::uint8_t, 3>;
using Rgba = std::array<std::uint8_t, 4>;

/// 8-bit RGB image, row-major, three bytes per pixel.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  Raster() = default;
  Raster(std::size_t w, std::size_t h, Rgb fill = {255, 255, 255}) : width(w), height(h), pixels(3 * w * h) {
    if (w == 0 || h == 0) throw Error(ErrorCode::InvalidInput, "raster dimensions must be at least 1x1");
    for (std::size_t i = 0; i < w * h; ++i) set(i, fill);
  }

  Rgb at(std::size_t x, std::size_t y) const { return get(y * width + x); }
  void put(std::size_t x, std::size_t y, Rgb c) { set(y * width + x, c); }
  Rgb get(std::size_t i) const { return {pixels[3 * i], pixels[3 * i + 1], pixels[3 * i + 2]}; }
  void set(std::size_t i, Rgb c) {
    pixels[3 * i] = c[0];
    pixels[3 * i + 1] = c[1];
    pixels[3 * i + 2] = c[2];
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

inline void validate_raster(const Raster& r) {
  if (r.width == 0 || r.height == 0) throw Error(ErrorCode::InvalidInput, "raster dimensions must be at least 1x1");
  if (r.pixels.size() != 3 * r.width * r.height)
    throw Error(ErrorCode::InvalidInput, "raster buffer length does not match its dimensions");
}

/// RGBA image used for projector overlays.
struct RgbaImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  RgbaImage() = default;
  RgbaImage(std::size_t w, std::size_t h, Rgba fill = {0, 0, 0, 0}) : width(w), height(h), pixels(4 * w * h) {
    if (w == 0 || h == 0) throw Error(ErrorCode::InvalidInput, "image dimensions must be at least 1x1");
    for (std::size_t i = 0; i < w * h; ++i) std::copy(fill.begin(), fill.end(), pixels.begin() + 4 * i);
  }

  Rgba at(std::size_t x, std::size_t y) const {
    const std::size_t i = 4 * (y * width + x);
    return {pixels[i], pixels[i + 1], pixels[i + 2], pixels[i + 3]};
  }
  void put(std::size_t x, std::size_t y, Rgba c) { std::copy(c.begin(), c.end(), pixels.begin() + 4 * (y * width + x)); }
};

/// Binary image, one byte per pixel (0 or 1).
struct Mask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(std::size_t w, std::size_t h) : width(w), height(h), bits(w * h, 0) {}

  bool at(std::size_t x, std::size_t y) const { return bits[y * width + x] != 0; }
  void put(std::size_t x, std::size_t y, bool v) { bits[y * width + x] = v ? 1 : 0; }
  /// Out-of-range reads are background.
  bool get(long x, long y) const {
    if (x < 0 || y < 0 || x >= static_cast<long>(width) || y >= static_cast<long>(height)) return false;
    return bits[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] != 0;
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

}  // namespace sketchplay

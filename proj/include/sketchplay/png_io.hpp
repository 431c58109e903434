#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <png.h>

#include "sketchplay/error.hpp"
#include "sketchplay/raster.hpp"

namespace sketchplay {

namespace detail {

inline std::string png_failure(png_image& img, const std::string& what) {
  std::string msg = what + ": " + img.message;
  png_image_free(&img);
  return msg;
}

template <typename Image>
std::string encode_png(const Image& image, png_uint_32 format) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr))
    throw Error(ErrorCode::Io, png_failure(img, "png encode failed"));
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr))
    throw Error(ErrorCode::Io, png_failure(img, "png encode failed"));
  out.resize(size);
  return out;
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

}  // namespace detail

/// Decodes any PNG (gray, palette, alpha composited on white) to RGB.
inline Raster decode_png(const std::string& bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw Error(ErrorCode::Parse, detail::png_failure(img, "not a readable PNG"));
  img.format = PNG_FORMAT_RGB;
  Raster r;
  r.width = img.width;
  r.height = img.height;
  r.pixels.resize(PNG_IMAGE_SIZE(img));
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&img, &white, r.pixels.data(), 0, nullptr))
    throw Error(ErrorCode::Parse, detail::png_failure(img, "PNG decode failed"));
  validate_raster(r);
  return r;
}

inline Raster read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

inline std::string encode_png(const Raster& r) {
  validate_raster(r);
  return detail::encode_png(r, PNG_FORMAT_RGB);
}

inline std::string encode_png(const RgbaImage& r) { return detail::encode_png(r, PNG_FORMAT_RGBA); }

/// Mask as 8-bit gray, set pixels black on white.
inline std::string encode_png(const Mask& m) {
  Raster r(m.width, m.height);
  for (std::size_t i = 0; i < m.bits.size(); ++i)
    if (m.bits[i]) r.set(i, {0, 0, 0});
  return encode_png(r);
}

template <typename Image>
void write_png(const std::filesystem::path& path, const Image& image) {
  detail::write_bytes(path, encode_png(image));
}

}  // namespace sketchplay

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchplay/error.hpp"
#include "sketchplay/sketcher.hpp"

namespace sketchplay {

// Checkpoint layout: one line of JSON (the header) terminated by '\n',
// followed by every parameter array as little-endian IEEE-754 float32 in
// the order listed under "arrays".

struct Checkpoint {
  ModelParams<float> params;
  SketcherConfig config;
  double offset_scale = 1.0;
  /// FNV-1a hash of the serialized bytes, hex encoded.
  std::string id;
};

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string serialize_checkpoint(const ModelParams<float>& params, const SketcherConfig& cfg,
                                        double offset_scale) {
  nlohmann::json arrays = nlohmann::json::array();
  for (const auto& a : parameter_layout(params.hidden, params.mixtures))
    arrays.push_back({{"name", a.name}, {"shape", a.shape}});
  SketcherConfig stored = cfg;
  stored.hidden_size = params.hidden;
  stored.num_mixtures = params.mixtures;
  const nlohmann::json header = {{"format", "sketchplay-checkpoint"},
                                 {"version", 1},
                                 {"dtype", "float32-le"},
                                 {"config", to_json(stored)},
                                 {"seed", stored.seed},
                                 {"offset_scale", offset_scale},
                                 {"arrays", arrays}};
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + 4 * params.data.size());
  for (float v : params.data) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
  }
  return out;
}

inline Checkpoint parse_checkpoint(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw Error(ErrorCode::Parse, "checkpoint header is not terminated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, "checkpoint header is not valid JSON", e.what());
  }
  if (header.value("format", "") != "sketchplay-checkpoint")
    throw Error(ErrorCode::Parse, "not a sketchplay checkpoint");
  Checkpoint ck;
  ck.config = sketcher_config_from_json(header.at("config"));
  ck.offset_scale = header.value("offset_scale", 1.0);
  ck.params = ModelParams<float>(ck.config.hidden_size, ck.config.num_mixtures);

  const auto layout = parameter_layout(ck.config.hidden_size, ck.config.num_mixtures);
  const auto& arrays = header.at("arrays");
  if (arrays.size() != layout.size()) throw Error(ErrorCode::Parse, "checkpoint array list does not match");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (arrays[i].at("name").get<std::string>() != layout[i].name ||
        arrays[i].at("shape").get<std::vector<std::size_t>>() != layout[i].shape)
      throw Error(ErrorCode::Parse, "checkpoint array '" + layout[i].name + "' has unexpected name or shape");
  }
  const std::size_t payload = bytes.size() - nl - 1;
  if (payload != 4 * ck.params.data.size())
    throw Error(ErrorCode::Parse, "checkpoint payload has " + std::to_string(payload) + " bytes, expected " +
                                      std::to_string(4 * ck.params.data.size()));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + nl + 1);
  for (std::size_t i = 0; i < ck.params.data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
    ck.params.data[i] = std::bit_cast<float>(bits);
  }
  if (!ck.params.all_finite()) throw Error(ErrorCode::Numeric, "checkpoint contains non-finite weights");
  ck.id = fnv1a_hex(bytes);
  return ck;
}

/// Writes atomically (temp file + rename). Returns the checkpoint id.
inline std::string save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                                   const SketcherConfig& cfg, double offset_scale) {
  const std::string bytes = serialize_checkpoint(params, cfg, offset_scale);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
  return fnv1a_hex(bytes);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace sketchplay

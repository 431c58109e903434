#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchplay/mdn.hpp"
#include "sketchplay/rng.hpp"
#include "sketchplay/sketcher.hpp"
#include "sketchplay/stroke5.hpp"

namespace sketchplay {

/// Which strokes the machine sees. Emitter: its own (blue) and the theme
/// (black). Receptor: everything. Custom: an explicit channel set.
struct CompletionPolicy {
  enum class Kind { Emitter, Receptor, Custom };
  Kind kind = Kind::Emitter;
  std::set<PlayerChannel> channels;  // Custom only

  static CompletionPolicy emitter() { return {Kind::Emitter, {}}; }
  static CompletionPolicy receptor() { return {Kind::Receptor, {}}; }
  static CompletionPolicy custom(std::set<PlayerChannel> chs) {
    if (chs.empty()) throw Error(ErrorCode::InvalidInput, "custom policy needs at least one channel");
    return {Kind::Custom, std::move(chs)};
  }

  bool admits(PlayerChannel c) const {
    switch (kind) {
      case Kind::Emitter: return c == PlayerChannel::Blue || c == PlayerChannel::Black;
      case Kind::Receptor: return true;
      case Kind::Custom: return channels.contains(c);
    }
    return false;
  }

  friend bool operator==(const CompletionPolicy&, const CompletionPolicy&) = default;
};

inline std::string policy_name(const CompletionPolicy& p) {
  switch (p.kind) {
    case CompletionPolicy::Kind::Emitter: return "emitter";
    case CompletionPolicy::Kind::Receptor: return "receptor";
    case CompletionPolicy::Kind::Custom: return "custom";
  }
  return "emitter";
}

inline nlohmann::json to_json(const CompletionPolicy& p) {
  nlohmann::json j = {{"policy", policy_name(p)}};
  if (p.kind == CompletionPolicy::Kind::Custom) {
    nlohmann::json chs = nlohmann::json::array();
    for (auto c : p.channels) chs.push_back(std::string(to_string(c)));
    j["channels"] = chs;
  }
  return j;
}

inline CompletionPolicy policy_from_json(const nlohmann::json& j) {
  const std::string name = j.value("policy", std::string("emitter"));
  if (name == "emitter") return CompletionPolicy::emitter();
  if (name == "receptor") return CompletionPolicy::receptor();
  if (name == "custom") {
    std::set<PlayerChannel> chs;
    for (const auto& c : j.value("channels", nlohmann::json::array())) {
      const auto ch = parse_channel(c.get<std::string>());
      if (!ch) throw Error(ErrorCode::Parse, "unknown channel in custom policy");
      chs.insert(*ch);
    }
    return CompletionPolicy::custom(std::move(chs));
  }
  throw Error(ErrorCode::Parse, "unknown policy '" + name + "'");
}

/// Newly generated rows plus everything needed to reproduce them.
struct Suggestion {
  std::vector<Stroke5Row> rows;
  double temperature = 0.0;
  CompletionPolicy policy_used;
  std::uint64_t seed = 0;
  std::size_t amount = 1;
  /// True when generation stopped at the row cap rather than after
  /// `amount` strokes.
  bool cap_hit = false;
  /// True when the prefix was empty, so the first generated point continues
  /// a stroke that starts at the origin.
  bool unconditional = false;

  friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

inline nlohmann::json to_json(const Suggestion& s) {
  nlohmann::json j = to_json(s.policy_used);
  j["rows"] = rows_to_json(s.rows);
  j["temperature"] = s.temperature;
  j["seed"] = s.seed;
  j["amount"] = s.amount;
  j["cap_hit"] = s.cap_hit;
  j["unconditional"] = s.unconditional;
  return j;
}

inline Suggestion suggestion_from_json(const nlohmann::json& j) {
  Suggestion s;
  s.policy_used = policy_from_json(j);
  s.rows = rows_from_json(j.at("rows"));
  s.temperature = j.at("temperature").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.amount = j.at("amount").get<std::size_t>();
  s.cap_hit = j.value("cap_hit", false);
  s.unconditional = j.value("unconditional", false);
  return s;
}

/// Default stroke length (rows) assumed for the cap when the prefix has no
/// strokes to measure.
inline constexpr double kDefaultStrokeRows = 20.0;

/// Mean rows per stroke in a prefix, ignoring the End row.
inline double mean_stroke_rows(const std::vector<Stroke5Row>& prefix) {
  std::size_t rows = 0;
  std::size_t strokes = 0;
  for (const auto& r : prefix) {
    if (r.pen == Pen::End) break;
    ++rows;
    if (r.pen == Pen::Up) ++strokes;
  }
  return strokes == 0 ? kDefaultStrokeRows : static_cast<double>(rows) / static_cast<double>(strokes);
}

/// Conditions on `prefix` and samples until `amount` strokes are finished or
/// 10 x amount x mean-stroke-length rows were drawn. A sampled End is read as
/// the end of the current stroke, since the caller asked for a stroke count.
/// The returned rows always close with Up on the last point and an End row.
template <typename T>
Suggestion complete(const ModelParams<T>& params, const std::vector<Stroke5Row>& prefix, std::size_t amount,
                    double temperature, std::uint64_t seed) {
  if (amount < 1) throw Error(ErrorCode::InvalidInput, "amount must be at least 1");
  if (!(temperature >= 0.0) || !std::isfinite(temperature))
    throw Error(ErrorCode::InvalidInput, "temperature must be a finite value >= 0");
  if (!valid_rows(prefix)) throw Error(ErrorCode::InvalidInput, "prefix rows are not a valid encoding");

  std::vector<Stroke5Row> feed;
  for (const auto& r : prefix) {
    if (r.pen == Pen::End) break;
    feed.push_back(r);
  }
  Suggestion out;
  out.temperature = temperature;
  out.seed = seed;
  out.amount = amount;
  out.unconditional = feed.empty();
  if (feed.empty()) feed.push_back(Stroke5Row::start());

  const auto cap = static_cast<std::size_t>(
      std::max(2.0, std::ceil(10.0 * static_cast<double>(amount) * mean_stroke_rows(prefix))));

  auto state = init_state(params);
  MixtureParams mix;
  for (const auto& r : feed) {
    auto step = forward_step(params, state, r);
    state = std::move(step.state);
    mix = std::move(step.mixture);
  }

  Rng rng(seed);
  std::size_t finished = 0;
  while (finished < amount) {
    if (out.rows.size() >= cap) {
      out.cap_hit = true;
      break;
    }
    Stroke5Row row = sample_next(mix, temperature, rng);
    if (row.pen == Pen::End) row.pen = Pen::Up;
    if (row.pen == Pen::Up) ++finished;
    out.rows.push_back(row);
    if (finished == amount) break;
    auto step = forward_step(params, state, row);
    state = std::move(step.state);
    mix = std::move(step.mixture);
  }
  if (!out.rows.empty()) out.rows.back().pen = Pen::Up;
  out.rows.push_back(Stroke5Row::end());
  return out;
}

/// Turns suggestion rows (normalized units) into strokes: offsets are
/// multiplied by `scale` and walked from `origin`, the last point of the
/// conditioning context.
inline Sketch decode_suggestion(const Suggestion& s, Point origin, double scale, PlayerChannel channel,
                                CanvasSize canvas) {
  return decode_rows(scale_offsets(s.rows, scale), origin, channel, s.unconditional, canvas).sketch;
}

}  // namespace sketchplay

#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchplay/calibration.hpp"
#include "sketchplay/checkpoint.hpp"
#include "sketchplay/completion.hpp"
#include "sketchplay/png_io.hpp"
#include "sketchplay/render.hpp"
#include "sketchplay/session.hpp"
#include "sketchplay/vision.hpp"

namespace sketchplay {

/// Completer backed by a trained checkpoint.
class ModelCompleter : public Completer {
 public:
  explicit ModelCompleter(Checkpoint ck, std::size_t max_rows = 250) : ck_(std::move(ck)), max_rows_(max_rows) {}

  Suggestion complete(const std::vector<Stroke5Row>& prefix, std::size_t amount, double temperature,
                      std::uint64_t seed) const override {
    return sketchplay::complete(ck_.params, prefix, amount, temperature, seed);
  }
  std::string checkpoint_id() const override { return ck_.id; }
  std::size_t max_context_rows() const override { return max_rows_; }

 private:
  Checkpoint ck_;
  std::size_t max_rows_;
};

inline CompletionRequest completion_request_from_json(const nlohmann::json& j) {
  CompletionRequest r;
  try {
    r.policy = policy_from_json(j.contains("policy") ? j : nlohmann::json{{"policy", "emitter"}});
    r.amount = j.value("amount", std::size_t{1});
    r.temperature = j.value("temperature", 0.0);
    r.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("completion request: ") + e.what());
  }
  return r;
}

struct EngineConfig {
  std::filesystem::path data_dir = "data";
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> calibration;
  /// Partial ColorPalette JSON applied over the defaults.
  nlohmann::json palette = nlohmann::json::object();
  std::size_t projector_width = 1920;
  std::size_t projector_height = 1080;
};

/// Sessions, model, calibration and palette behind one interface, used by
/// both the HTTP service and the CLI. Every mutation writes its journal
/// event to disk before the in-memory state changes.
class Engine {
 public:
  explicit Engine(EngineConfig cfg, std::shared_ptr<const Completer> model = nullptr)
      : cfg_(std::move(cfg)), model_(std::move(model)), palette_(palette_from_json(cfg_.palette)) {
    if (!model_ && cfg_.checkpoint) model_ = std::make_shared<ModelCompleter>(load_checkpoint(*cfg_.checkpoint));
    std::filesystem::create_directories(cfg_.data_dir);
    if (cfg_.calibration) calibration_ = load_calibration(*cfg_.calibration);
    else if (std::filesystem::exists(cfg_.data_dir / "calibration.json"))
      calibration_ = load_calibration(cfg_.data_dir / "calibration.json");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(cfg_.data_dir))
      if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        auto slot = std::make_shared<Slot>();
        slot->session = replay(load_journal(f));
        sessions_[slot->session.id] = slot;
      } catch (const Error& e) {
        throw Error(e.code(), "journal " + f.string() + ": " + e.what(), e.detail());
      }
    }
  }

  const EngineConfig& config() const { return cfg_; }
  bool has_model() const { return model_ != nullptr; }

  std::vector<std::string> session_ids() const {
    std::lock_guard lock(map_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
  }

  /// Body: {"id"?, "canvas"?: [w, h], "turn_order"?: [...], "theme"?: Sketch}.
  Session create(const nlohmann::json& body) {
    std::string id;
    try {
      id = body.value("id", std::string{});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, std::string("session request: ") + e.what());
    }
    if (!id.empty() && (id.size() > 64 || id.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
                              std::string::npos))
      throw Error(ErrorCode::InvalidInput, "session id may use letters, digits, '_' and '-' (at most 64)");
    CanvasSize canvas;
    std::vector<PlayerChannel> order(kDefaultTurnOrder.begin(), kDefaultTurnOrder.end());
    Sketch theme;
    try {
      if (body.contains("canvas")) {
        const auto c = body.at("canvas").get<std::array<double, 2>>();
        canvas = {c[0], c[1]};
      } else if (body.contains("theme") && body.at("theme").contains("canvas")) {
        canvas = sketch_from_json(body.at("theme")).canvas;
      }
      if (body.contains("turn_order")) {
        order.clear();
        for (const auto& c : body.at("turn_order")) order.push_back(detail::channel_from_json(c));
      }
      if (body.contains("theme")) theme = sketch_from_json(body.at("theme"), canvas);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, std::string("session request: ") + e.what());
    }
    std::lock_guard lock(map_mutex_);
    if (id.empty()) id = fresh_id();
    if (sessions_.contains(id)) throw Error(ErrorCode::InvalidInput, "session " + id + " already exists", id);
    auto slot = std::make_shared<Slot>();
    slot->session = create_session(id, canvas, theme, order);
    write_journal(journal_path(id), slot->session.journal);
    sessions_[id] = slot;
    notify();
    return slot->session;
  }

  Session get(const std::string& id) const {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    return slot->session;
  }

  /// Body: {"player": "red", "sketch": Sketch}.
  Session submit(const std::string& id, const nlohmann::json& body) {
    return mutate(id, [&](Session& s) {
      try {
        const PlayerChannel player = detail::channel_from_json(body.at("player"));
        submit_strokes(s, player, sketch_from_json(body.at("sketch"), s.canvas));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("strokes request: ") + e.what());
      }
    });
  }

  PendingSuggestion complete(const std::string& id, const nlohmann::json& body) {
    if (!model_) throw Error(ErrorCode::NotFound, "no model checkpoint is loaded");
    const CompletionRequest req = completion_request_from_json(body);
    const Session s = mutate(id, [&](Session& s) { request_completion(s, *model_, req); });
    return *s.pending;
  }

  /// Body: {"decision": "accept" | "modify" | "reject", "sketch"?: Sketch}.
  Session resolve(const std::string& id, const nlohmann::json& body) {
    return mutate(id, [&](Session& s) {
      try {
        const Decision d = parse_decision(body.at("decision").get<std::string>());
        std::optional<Sketch> edit;
        if (body.contains("sketch")) edit = sketch_from_json(body.at("sketch"), s.canvas);
        resolve_suggestion(s, d, edit);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("resolve request: ") + e.what());
      }
    });
  }

  Session consensus(const std::string& id, const nlohmann::json& body) {
    return mutate(id, [&](Session& s) {
      try {
        signal_consensus(s, detail::channel_from_json(body.at("player")));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("consensus request: ") + e.what());
      }
    });
  }

  std::map<PlayerChannel, ChannelStats> stats(const std::string& id) const { return contribution_stats(get(id)); }

  /// Camera frame to canvas millimeters. Without a calibration the capture
  /// is assumed to show exactly the canvas.
  Homography camera_to_canvas(CanvasSize canvas, std::size_t width, std::size_t height) const {
    std::lock_guard lock(calib_mutex_);
    if (calibration_) return calibration_->frames.get(Frame::Camera, Frame::Canvas);
    return Homography::scaling(canvas.width / static_cast<double>(width), canvas.height / static_cast<double>(height));
  }

  /// Canvas millimeters to projector pixels. Without a calibration the
  /// canvas is fitted, centred, into the projector frame.
  Homography canvas_to_projector(CanvasSize canvas) const {
    std::lock_guard lock(calib_mutex_);
    if (calibration_) return calibration_->frames.get(Frame::Canvas, Frame::Projector);
    const double w = static_cast<double>(cfg_.projector_width), h = static_cast<double>(cfg_.projector_height);
    const double k = std::min(w / canvas.width, h / canvas.height);
    return Homography::translation((w - k * canvas.width) / 2, (h - k * canvas.height) / 2)
        .after(Homography::scaling(k, k));
  }

  /// Projector frame: the pending suggestion in blue on transparent, or a
  /// plain white frame for lighting the canvas before a capture.
  std::string overlay_png(const std::string& id, bool white) const {
    if (white) return encode_png(Raster(cfg_.projector_width, cfg_.projector_height));
    const Session s = get(id);
    Sketch shown;
    shown.canvas = s.canvas;
    if (s.pending) shown = s.pending->proposal;
    return encode_png(render_overlay(shown, canvas_to_projector(s.canvas), cfg_.projector_width,
                                     cfg_.projector_height));
  }

  struct CaptureResult {
    Session session;
    Sketch added;
    /// New strokes seen in other players' colors, left out of the round.
    Sketch ignored;
  };

  /// Vectorizes a camera frame, keeps the strokes that are new since the
  /// last state and in the submitting player's color, and submits them as
  /// that player's round. `player` defaults to whoever's turn it is.
  CaptureResult capture(const std::string& id, const std::string& png, std::optional<PlayerChannel> player) {
    const Raster frame = decode_png(png);
    CaptureResult out;
    out.session = mutate(id, [&](Session& s) {
      const PlayerChannel who = player.value_or(s.next_player());
      const Sketch fresh = extract_new_strokes(s.sketch(), frame, palette(),
                                               camera_to_canvas(s.canvas, frame.width, frame.height));
      out.added = Sketch{{}, s.canvas};
      out.ignored = Sketch{{}, s.canvas};
      for (const auto& st : fresh.strokes) {
        Stroke clamped = st;
        for (auto& p : clamped.points) p = clamp_to_canvas(p, s.canvas);
        clamped.points = merge_duplicates(std::move(clamped.points));
        (st.channel == who ? out.added : out.ignored).strokes.push_back(std::move(clamped));
      }
      submit_strokes(s, who, out.added);
    });
    return out;
  }

  /// Body is either a correspondence file ({"sets": ...}) to solve or a
  /// calibration file ({"matrices": ...}) to install. The result is also
  /// written to data_dir/calibration.json.
  Calibration set_calibration(const nlohmann::json& body) {
    Calibration c = body.contains("sets") ? calibrate(correspondences_from_json(body)) : calibration_from_json(body);
    std::ofstream out(cfg_.data_dir / "calibration.json");
    out << to_json(c).dump(2) << '\n';
    std::lock_guard lock(calib_mutex_);
    calibration_ = c;
    return c;
  }

  std::optional<Calibration> calibration() const {
    std::lock_guard lock(calib_mutex_);
    return calibration_;
  }

  ColorPalette palette() const { return palette_; }

  /// Journal events with seq >= `from`, waiting up to `timeout` for one to
  /// appear.
  std::vector<Event> events_since(const std::string& id, std::size_t from, std::chrono::milliseconds timeout) const {
    auto slot = find(id);
    std::unique_lock lock(events_mutex_);
    const auto have = [&] {
      std::lock_guard l(slot->mutex);
      return slot->session.journal.size() > from;
    };
    events_cv_.wait_for(lock, timeout, have);
    std::lock_guard l(slot->mutex);
    const auto& j = slot->session.journal;
    if (j.size() <= from) return {};
    return {j.begin() + static_cast<std::ptrdiff_t>(from), j.end()};
  }

  /// Wakes every waiting event stream (used on shutdown).
  void notify() const {
    std::lock_guard lock(events_mutex_);
    events_cv_.notify_all();
  }

 private:
  struct Slot {
    mutable std::mutex mutex;
    Session session;
  };

  std::shared_ptr<Slot> find(const std::string& id) const {
    std::lock_guard lock(map_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id + "'", id);
    return it->second;
  }

  std::filesystem::path journal_path(const std::string& id) const { return cfg_.data_dir / (id + ".jsonl"); }

  template <typename Op>
  Session mutate(const std::string& id, Op&& op) {
    auto slot = find(id);
    Session result;
    {
      std::lock_guard lock(slot->mutex);
      Session next = slot->session;
      op(next);
      for (std::size_t i = slot->session.journal.size(); i < next.journal.size(); ++i)
        append_journal(journal_path(id), next.journal[i]);
      slot->session = std::move(next);
      result = slot->session;
    }
    notify();
    return result;
  }

  // Caller holds map_mutex_.
  std::string fresh_id() {
    std::random_device rd;
    for (;;) {
      char buf[17];
      const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
      if (!sessions_.contains(buf)) return buf;
    }
  }

  EngineConfig cfg_;
  std::shared_ptr<const Completer> model_;
  ColorPalette palette_;
  std::optional<Calibration> calibration_;
  mutable std::mutex calib_mutex_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  mutable std::mutex events_mutex_;
  mutable std::condition_variable events_cv_;
};

}  // namespace sketchplay

#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sketchplay/engine.hpp"

namespace sketchplay {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::TurnViolation:
    case ErrorCode::SuggestionPending:
    case ErrorCode::NoPendingSuggestion:
    case ErrorCode::SessionClosed: return 409;
    case ErrorCode::Channel:
    case ErrorCode::InvalidTheme:
    case ErrorCode::EmptyContext:
    case ErrorCode::NotAVoter:
    case ErrorCode::Degenerate: return 422;
    case ErrorCode::Io:
    case ErrorCode::Numeric:
    case ErrorCode::Replay: return 500;
    default: return 400;
  }
}

inline nlohmann::json error_json(const Error& e) {
  return {{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"detail", e.detail()}};
}

/// Payload pushed on the event stream for one journal event.
inline nlohmann::json stream_message(const Event& e) {
  return {{"event", e.type}, {"seq", e.seq}, {"round", e.round}, {"payload", e.payload}};
}

/// HTTP front end over an Engine. Server-sent events carry the journal to
/// subscribers at /sessions/{id}/events.
class Service {
 public:
  explicit Service(Engine& engine) : engine_(engine) { routes(); }

  httplib::Server& server() { return server_; }

  /// Binds and serves until stop(); returns false when the address is busy.
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  bool bind(const std::string& host, int port) { return server_.bind_to_port(host, port); }
  bool is_running() const { return server_.is_running(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

  void stop() {
    stopping_ = true;
    engine_.notify();
    server_.stop();
  }

 private:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::Parse, std::string("request body is not valid JSON: ") + e.what());
    }
  }

  static Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        send_json(res, error_json(e), http_status(e.code()));
      } catch (const std::exception& e) {
        send_json(res, error_json(Error(ErrorCode::Io, e.what())), 500);
      }
    };
  }

  void routes() {
    const std::string sid = "/sessions/([A-Za-z0-9_-]+)";

    server_.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
                  send_json(res, {{"status", "ok"},
                                  {"model", engine_.has_model()},
                                  {"calibrated", engine_.calibration().has_value()},
                                  {"sessions", engine_.session_ids().size()}});
                }));

    server_.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
                  send_json(res, {{"sessions", engine_.session_ids()}});
                }));

    server_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, to_json(engine_.create(parse_body(req))), 201);
                 }));

    server_.Get(sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, to_json(engine_.get(req.matches[1])));
                }));

    server_.Post(sid + "/strokes", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, to_json(engine_.submit(req.matches[1], parse_body(req))));
                 }));

    server_.Post(sid + "/complete", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, to_json(engine_.complete(req.matches[1], parse_body(req))));
                 }));

    server_.Post(sid + "/resolve", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, to_json(engine_.resolve(req.matches[1], parse_body(req))));
                 }));

    server_.Post(sid + "/consensus", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, to_json(engine_.consensus(req.matches[1], parse_body(req))));
                 }));

    server_.Get(sid + "/stats", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, to_json(engine_.stats(req.matches[1])));
                }));

    server_.Get(sid + "/suggestion.png", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const bool white = req.get_param_value("illumination") == "white";
                  res.set_content(engine_.overlay_png(req.matches[1], white), "image/png");
                }));

    // multipart/form-data: "image" (PNG), optional "player"; a raw
    // image/png body is accepted too, with ?player=.
    server_.Post(sid + "/capture", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   std::string png;
                   std::string player = req.get_param_value("player");
                   if (req.is_multipart_form_data()) {
                     if (!req.has_file("image")) throw Error(ErrorCode::InvalidInput, "multipart field 'image' missing");
                     png = req.get_file_value("image").content;
                     if (req.has_file("player")) player = req.get_file_value("player").content;
                   } else {
                     png = req.body;
                   }
                   std::optional<PlayerChannel> who;
                   if (!player.empty()) {
                     who = parse_channel(player);
                     if (!who) throw Error(ErrorCode::Parse, "unknown player '" + player + "'");
                   }
                   const auto r = engine_.capture(req.matches[1], png, who);
                   send_json(res, {{"added", to_json(r.added)}, {"ignored", to_json(r.ignored)},
                                   {"session", to_json(r.session)}});
                 }));

    server_.Post("/calibration", guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, to_json(engine_.set_calibration(parse_body(req))));
                 }));

    // Server-sent events: every journal event from ?from= (default 0) or
    // after Last-Event-ID, then live events as they are appended.
    server_.Get(sid + "/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  engine_.get(id);  // 404 before the stream starts
                  std::size_t from = 0;
                  if (req.has_header("Last-Event-ID")) from = std::stoul(req.get_header_value("Last-Event-ID")) + 1;
                  else if (req.has_param("from")) from = std::stoul(req.get_param_value("from"));
                  auto cursor = std::make_shared<std::size_t>(from);
                  res.set_header("Cache-Control", "no-cache");
                  res.set_chunked_content_provider(
                      "text/event-stream", [this, id, cursor](std::size_t, httplib::DataSink& sink) {
                        if (stopping_) return false;
                        const auto events = engine_.events_since(id, *cursor, std::chrono::milliseconds(1000));
                        std::string chunk;
                        for (const auto& e : events) {
                          chunk += "id: " + std::to_string(e.seq) + "\nevent: " + e.type +
                                   "\ndata: " + stream_message(e).dump() + "\n\n";
                          *cursor = e.seq + 1;
                        }
                        if (chunk.empty()) chunk = ": keepalive\n\n";
                        return !stopping_ && sink.write(chunk.data(), chunk.size());
                      });
                }));
  }

  Engine& engine_;
  httplib::Server server_;
  std::atomic<bool> stopping_{false};
};

}  // namespace sketchplay

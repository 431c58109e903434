#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchplay/clock.hpp"
#include "sketchplay/completion.hpp"
#include "sketchplay/error.hpp"
#include "sketchplay/geometry.hpp"
#include "sketchplay/rdp.hpp"
#include "sketchplay/sketch.hpp"
#include "sketchplay/stroke5.hpp"

namespace sketchplay {

enum class SessionStatus { Open, Closed };
enum class Decision { Accept, Modify, Reject };

inline std::string to_string(SessionStatus s) { return s == SessionStatus::Open ? "open" : "closed"; }

inline std::string to_string(Decision d) {
  switch (d) {
    case Decision::Accept: return "accept";
    case Decision::Modify: return "modify";
    case Decision::Reject: return "reject";
  }
  return "?";
}

inline Decision parse_decision(const std::string& s) {
  if (s == "accept") return Decision::Accept;
  if (s == "modify") return Decision::Modify;
  if (s == "reject") return Decision::Reject;
  throw Error(ErrorCode::InvalidInput, "unknown decision '" + s + "'");
}

/// What the machine was shown for one completion request.
struct ContextRecord {
  /// Indices into the session's chronological stroke list.
  std::vector<std::size_t> stroke_ids;
  /// Normalized stroke-5 rows fed to the model.
  std::vector<Stroke5Row> rows;
  /// Canvas point the generated offsets start from.
  Point origin;
  /// Millimeters per model unit.
  double scale = 1.0;

  friend bool operator==(const ContextRecord&, const ContextRecord&) = default;
};

struct PendingSuggestion {
  Suggestion suggestion;
  ContextRecord context;
  std::string checkpoint_id;
  /// The suggestion decoded to blue strokes on the canvas.
  Sketch proposal;

  friend bool operator==(const PendingSuggestion&, const PendingSuggestion&) = default;
};

struct SuggestionMeta {
  PendingSuggestion request;
  Decision decision = Decision::Reject;

  friend bool operator==(const SuggestionMeta&, const SuggestionMeta&) = default;
};

struct Round {
  std::size_t index = 0;
  PlayerChannel player = PlayerChannel::Red;
  Sketch strokes_added;
  std::optional<SuggestionMeta> suggestion_meta;

  friend bool operator==(const Round&, const Round&) = default;
};

struct Event {
  std::size_t seq = 0;
  std::string type;
  std::size_t round = 0;
  std::string timestamp;
  nlohmann::json payload;

  friend bool operator==(const Event&, const Event&) = default;
};

inline constexpr std::array<PlayerChannel, 3> kDefaultTurnOrder{PlayerChannel::Red, PlayerChannel::Green,
                                                                PlayerChannel::Blue};

struct Session {
  std::string id;
  CanvasSize canvas;
  Sketch theme;
  std::vector<PlayerChannel> turn_order;
  std::vector<Round> rounds;
  std::optional<PendingSuggestion> pending;
  bool red_consensus = false;
  bool green_consensus = false;
  SessionStatus status = SessionStatus::Open;
  std::vector<Event> journal;

  PlayerChannel next_player() const { return turn_order[rounds.size() % turn_order.size()]; }
  bool blank_start() const { return theme.empty(); }

  /// Theme strokes followed by every round's strokes, in play order.
  std::vector<Stroke> all_strokes() const {
    std::vector<Stroke> out = theme.strokes;
    for (const auto& r : rounds) out.insert(out.end(), r.strokes_added.strokes.begin(), r.strokes_added.strokes.end());
    return out;
  }

  Sketch sketch() const {
    Sketch s;
    s.canvas = canvas;
    s.strokes = all_strokes();
    return s;
  }

  friend bool operator==(const Session&, const Session&) = default;
};

// ---------------------------------------------------------------------------
// JSON for the parts carried in events

inline nlohmann::json to_json(const ContextRecord& c) {
  return {{"stroke_ids", c.stroke_ids}, {"rows", rows_to_json(c.rows)}, {"origin", {c.origin.x, c.origin.y}},
          {"scale", c.scale}};
}

inline ContextRecord context_from_json(const nlohmann::json& j) {
  ContextRecord c;
  c.stroke_ids = j.at("stroke_ids").get<std::vector<std::size_t>>();
  c.rows = rows_from_json(j.at("rows"));
  c.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
  c.scale = j.at("scale").get<double>();
  return c;
}

inline nlohmann::json to_json(const PendingSuggestion& p) {
  return {{"suggestion", to_json(p.suggestion)},
          {"context", to_json(p.context)},
          {"checkpoint_id", p.checkpoint_id},
          {"proposal", to_json(p.proposal)}};
}

inline PendingSuggestion pending_from_json(const nlohmann::json& j, CanvasSize canvas) {
  PendingSuggestion p;
  p.suggestion = suggestion_from_json(j.at("suggestion"));
  p.context = context_from_json(j.at("context"));
  p.checkpoint_id = j.at("checkpoint_id").get<std::string>();
  p.proposal = sketch_from_json(j.at("proposal"), canvas);
  return p;
}

inline nlohmann::json to_json(const Event& e) {
  return {{"seq", e.seq}, {"type", e.type}, {"round", e.round}, {"timestamp", e.timestamp}, {"payload", e.payload}};
}

inline Event event_from_json(const nlohmann::json& j) {
  Event e;
  e.seq = j.at("seq").get<std::size_t>();
  e.type = j.at("type").get<std::string>();
  e.round = j.at("round").get<std::size_t>();
  e.timestamp = j.at("timestamp").get<std::string>();
  e.payload = j.at("payload");
  return e;
}

namespace detail {

inline nlohmann::json channels_to_json(const std::vector<PlayerChannel>& cs) {
  nlohmann::json out = nlohmann::json::array();
  for (auto c : cs) out.push_back(std::string(to_string(c)));
  return out;
}

inline PlayerChannel channel_from_json(const nlohmann::json& j) {
  const auto c = parse_channel(j.get<std::string>());
  if (!c) throw Error(ErrorCode::Parse, "unknown channel '" + j.get<std::string>() + "'");
  return *c;
}

inline void require_open(const Session& s) {
  if (s.status == SessionStatus::Closed) throw Error(ErrorCode::SessionClosed, "session " + s.id + " is closed");
}

inline std::string name(PlayerChannel c) { return std::string(to_string(c)); }

// Each apply_* checks its preconditions against the current state and then
// mutates it. Live operations and replay share them.

inline void apply_created(Session& s, const nlohmann::json& p) {
  if (!s.journal.empty()) throw Error(ErrorCode::Replay, "SessionCreated must be the first event");
  Session fresh;
  fresh.id = p.at("id").get<std::string>();
  const auto canvas = p.at("canvas").get<std::array<double, 2>>();
  fresh.canvas = {canvas[0], canvas[1]};
  if (!valid_canvas(fresh.canvas)) throw Error(ErrorCode::InvalidInput, "canvas size must be positive");
  for (const auto& c : p.at("turn_order")) fresh.turn_order.push_back(channel_from_json(c));
  auto sorted = fresh.turn_order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::vector<PlayerChannel>{PlayerChannel::Red, PlayerChannel::Green, PlayerChannel::Blue})
    throw Error(ErrorCode::InvalidInput, "turn order must be a permutation of red, green and blue");
  fresh.theme = sketch_from_json(p.at("theme"), fresh.canvas);
  fresh.theme.canvas = fresh.canvas;
  for (std::size_t i = 0; i < fresh.theme.strokes.size(); ++i)
    if (fresh.theme.strokes[i].channel != PlayerChannel::Black)
      throw Error(ErrorCode::InvalidTheme, "theme stroke " + std::to_string(i) + " is " +
                                               name(fresh.theme.strokes[i].channel) + "; the theme is drawn in black",
                  std::to_string(i));
  validate_sketch(fresh.theme);
  s = std::move(fresh);
}

inline void apply_strokes(Session& s, const nlohmann::json& p) {
  require_open(s);
  const PlayerChannel player = channel_from_json(p.at("player"));
  if (s.pending)
    throw Error(ErrorCode::SuggestionPending, "a machine suggestion is waiting to be accepted, modified or rejected");
  if (player == PlayerChannel::Blue)
    throw Error(ErrorCode::Channel, "blue is the machine's channel; blue strokes enter only by resolving a suggestion");
  if (player == PlayerChannel::Black)
    throw Error(ErrorCode::Channel, "black belongs to the theme; it cannot take a turn");
  if (player != s.next_player())
    throw Error(ErrorCode::TurnViolation,
                "it is " + name(s.next_player()) + "'s turn, not " + name(player) + "'s", name(s.next_player()));
  Sketch added = sketch_from_json(p.at("sketch"), s.canvas);
  added.canvas = s.canvas;
  for (std::size_t i = 0; i < added.strokes.size(); ++i) {
    const PlayerChannel c = added.strokes[i].channel;
    if (c == player) continue;
    if (c == PlayerChannel::Blue)
      throw Error(ErrorCode::Channel,
                  "stroke " + std::to_string(i) + " is blue, a color that is not assigned to any player",
                  std::to_string(i));
    throw Error(ErrorCode::Channel, "stroke " + std::to_string(i) + " is " + name(c) + " but " + name(player) +
                                        " may only draw in " + name(player),
                std::to_string(i));
  }
  validate_sketch(added);
  s.rounds.push_back({s.rounds.size(), player, std::move(added), std::nullopt});
}

inline void apply_requested(Session& s, const nlohmann::json& p) {
  require_open(s);
  if (s.pending) throw Error(ErrorCode::SuggestionPending, "a suggestion is already pending");
  if (s.next_player() != PlayerChannel::Blue)
    throw Error(ErrorCode::TurnViolation, "it is " + name(s.next_player()) + "'s turn, not the machine's",
                name(s.next_player()));
  PendingSuggestion pending = pending_from_json(p, s.canvas);
  const auto n = s.all_strokes().size();
  for (auto id : pending.context.stroke_ids)
    if (id >= n) throw Error(ErrorCode::InvalidInput, "context refers to stroke " + std::to_string(id));
  for (const auto& st : pending.proposal.strokes)
    if (st.channel != PlayerChannel::Blue) throw Error(ErrorCode::Channel, "suggestions are drawn in blue");
  s.pending = std::move(pending);
}

inline void apply_resolved(Session& s, const nlohmann::json& p) {
  require_open(s);
  if (!s.pending) throw Error(ErrorCode::NoPendingSuggestion, "there is no pending suggestion to resolve");
  const Decision d = parse_decision(p.at("decision").get<std::string>());
  Round r{s.rounds.size(), PlayerChannel::Blue, {}, SuggestionMeta{*s.pending, d}};
  r.strokes_added.canvas = s.canvas;
  if (d == Decision::Accept) {
    r.strokes_added = s.pending->proposal;
  } else if (d == Decision::Modify) {
    r.strokes_added = sketch_from_json(p.at("sketch"), s.canvas);
    r.strokes_added.canvas = s.canvas;
    for (std::size_t i = 0; i < r.strokes_added.strokes.size(); ++i)
      if (r.strokes_added.strokes[i].channel != PlayerChannel::Blue)
        throw Error(ErrorCode::Channel,
                    "modified suggestion stroke " + std::to_string(i) + " is " +
                        name(r.strokes_added.strokes[i].channel) + "; suggestions are blue",
                    std::to_string(i));
    validate_sketch(r.strokes_added);
  }
  s.rounds.push_back(std::move(r));
  s.pending.reset();
}

inline void apply_consensus(Session& s, const nlohmann::json& p) {
  require_open(s);
  const PlayerChannel player = channel_from_json(p.at("player"));
  if (player == PlayerChannel::Red) s.red_consensus = true;
  else if (player == PlayerChannel::Green) s.green_consensus = true;
  else throw Error(ErrorCode::NotAVoter, name(player) + " does not vote on ending the painting");
  if (s.red_consensus && s.green_consensus) s.status = SessionStatus::Closed;
}

inline void apply_event(Session& s, const Event& e) {
  if (e.seq != s.journal.size())
    throw Error(ErrorCode::Replay, "event out of order: expected seq " + std::to_string(s.journal.size()) + ", got " +
                                       std::to_string(e.seq));
  if (e.type != "SessionCreated" && e.round != s.rounds.size())
    throw Error(ErrorCode::Replay, "event round " + std::to_string(e.round) + " does not match the session round " +
                                       std::to_string(s.rounds.size()));
  try {
    if (e.type == "SessionCreated") apply_created(s, e.payload);
    else if (s.journal.empty()) throw Error(ErrorCode::Replay, "the first event must be SessionCreated");
    else if (e.type == "StrokesSubmitted") apply_strokes(s, e.payload);
    else if (e.type == "CompletionRequested") apply_requested(s, e.payload);
    else if (e.type == "SuggestionResolved") apply_resolved(s, e.payload);
    else if (e.type == "ConsensusSignaled") apply_consensus(s, e.payload);
    else throw Error(ErrorCode::Replay, "unknown event type '" + e.type + "'");
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::Parse, "malformed " + e.type + " payload: " + ex.what());
  }
  s.journal.push_back(e);
}

inline Event& record(Session& s, std::string type, nlohmann::json payload, const std::string& timestamp) {
  Event e{s.journal.size(), std::move(type), s.rounds.size(), timestamp, std::move(payload)};
  apply_event(s, e);
  return s.journal.back();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations. Each appends exactly one event to the journal on success and
// leaves the session untouched on failure.

inline Session create_session(const std::string& id, CanvasSize canvas, const Sketch& theme,
                              const std::vector<PlayerChannel>& turn_order = {kDefaultTurnOrder.begin(),
                                                                              kDefaultTurnOrder.end()},
                              const std::string& timestamp = utc_timestamp()) {
  if (id.empty()) throw Error(ErrorCode::InvalidInput, "session id must not be empty");
  Session s;
  Sketch t = theme;
  t.canvas = canvas;
  detail::record(s, "SessionCreated",
                 {{"id", id},
                  {"canvas", {canvas.width, canvas.height}},
                  {"turn_order", detail::channels_to_json(turn_order)},
                  {"theme", to_json(t)}},
                 timestamp);
  return s;
}

inline void submit_strokes(Session& s, PlayerChannel player, const Sketch& sketch,
                           const std::string& timestamp = utc_timestamp()) {
  Session next = s;
  Sketch added = sketch;
  added.canvas = s.canvas;
  detail::record(next, "StrokesSubmitted", {{"player", detail::name(player)}, {"sketch", to_json(added)}}, timestamp);
  s = std::move(next);
}

/// Generates continuation rows. The session does not depend on the model
/// type; the service and CLI plug in a loaded checkpoint.
class Completer {
 public:
  virtual ~Completer() = default;
  virtual Suggestion complete(const std::vector<Stroke5Row>& prefix, std::size_t amount, double temperature,
                              std::uint64_t seed) const = 0;
  virtual std::string checkpoint_id() const = 0;
  /// Longest context, in rows, the model is given.
  virtual std::size_t max_context_rows() const { return 250; }
};

struct CompletionRequest {
  CompletionPolicy policy;
  std::size_t amount = 1;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  /// Context strokes are simplified with this tolerance (mm) before encoding.
  double context_rdp_mm = 2.0;
};

/// Strokes the policy lets the machine see, oldest first, trimmed from the
/// oldest end to fit `max_rows`, then encoded and normalized. `strokes` is
/// in play order; the recorded ids index into it.
inline ContextRecord build_context(const std::vector<Stroke>& strokes, CanvasSize canvas,
                                   const CompletionPolicy& policy, std::size_t max_rows, double rdp_mm = 2.0) {
  std::vector<std::size_t> ids;
  std::vector<Stroke> picked;
  for (std::size_t i = 0; i < strokes.size(); ++i)
    if (policy.admits(strokes[i].channel)) {
      ids.push_back(i);
      picked.push_back({merge_duplicates(rdp_simplify(strokes[i].points, rdp_mm)), strokes[i].channel});
    }
  ContextRecord ctx;
  if (picked.empty()) {
    ctx.rows = {Stroke5Row::end()};
    ctx.origin = {canvas.width / 2, canvas.height / 2};
    ctx.scale = std::min(canvas.width, canvas.height) / 50.0;
    return ctx;
  }
  // Newest strokes first until the budget (including the End row) is spent.
  std::size_t used = 1, first = picked.size();
  while (first > 0) {
    // Counted as if first: a lone point then costs one extra row.
    const std::size_t n = detail::encoded_length(picked[first - 1], true);
    if (used + n > max_rows) break;
    used += n;
    --first;
  }
  if (first == picked.size()) --first;  // always keep the most recent stroke
  Sketch ctx_sketch;
  ctx_sketch.canvas = canvas;
  ctx_sketch.strokes.assign(picked.begin() + static_cast<std::ptrdiff_t>(first), picked.end());
  ctx.stroke_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(first), ids.end());
  const auto rows = to_stroke5(ctx_sketch, std::max(max_rows, used));
  const auto norm = normalize_offsets(rows);
  ctx.rows = norm.rows;
  ctx.scale = norm.scale;
  ctx.origin = ctx_sketch.strokes.back().points.back();
  return ctx;
}

inline ContextRecord build_context(const Session& s, const CompletionPolicy& policy, std::size_t max_rows,
                                   double rdp_mm = 2.0) {
  return build_context(s.all_strokes(), s.canvas, policy, max_rows, rdp_mm);
}

/// Runs the model on the strokes the policy admits and decodes the result
/// to blue strokes clamped to the canvas. Shared by sessions and the
/// stand-alone `complete` command.
inline PendingSuggestion propose(const std::vector<Stroke>& strokes, CanvasSize canvas, const Completer& model,
                                 const CompletionRequest& req) {
  PendingSuggestion p;
  p.context = build_context(strokes, canvas, req.policy, model.max_context_rows(), req.context_rdp_mm);
  if (p.context.stroke_ids.empty() && req.policy.kind != CompletionPolicy::Kind::Receptor)
    throw Error(ErrorCode::EmptyContext,
                "the " + policy_name(req.policy) +
                    " policy sees no strokes on this canvas; use the receptor policy to complete the humans' strokes");
  p.suggestion = model.complete(p.context.rows, req.amount, req.temperature, req.seed);
  p.suggestion.policy_used = req.policy;
  p.checkpoint_id = model.checkpoint_id();
  Sketch decoded = decode_suggestion(p.suggestion, p.context.origin, p.context.scale, PlayerChannel::Blue, canvas);
  p.proposal.canvas = canvas;
  for (auto& st : decoded.strokes) {
    for (auto& pt : st.points) pt = clamp_to_canvas(pt, canvas);
    st.points = merge_duplicates(std::move(st.points));
    p.proposal.strokes.push_back(std::move(st));
  }
  return p;
}

/// Asks the machine for a suggestion and stores it as pending.
inline const PendingSuggestion& request_completion(Session& s, const Completer& model, const CompletionRequest& req,
                                                   const std::string& timestamp = utc_timestamp()) {
  detail::require_open(s);
  if (s.pending) throw Error(ErrorCode::SuggestionPending, "a suggestion is already pending");
  if (s.next_player() != PlayerChannel::Blue)
    throw Error(ErrorCode::TurnViolation, "it is " + detail::name(s.next_player()) + "'s turn, not the machine's",
                detail::name(s.next_player()));
  const PendingSuggestion p = propose(s.all_strokes(), s.canvas, model, req);
  Session next = s;
  detail::record(next, "CompletionRequested", to_json(p), timestamp);
  s = std::move(next);
  return *s.pending;
}

inline void resolve_suggestion(Session& s, Decision d, const std::optional<Sketch>& modified = std::nullopt,
                               const std::string& timestamp = utc_timestamp()) {
  nlohmann::json payload = {{"decision", to_string(d)}};
  if (d == Decision::Modify) {
    if (!modified) throw Error(ErrorCode::InvalidInput, "modify needs the edited sketch");
    Sketch m = *modified;
    m.canvas = s.canvas;
    payload["sketch"] = to_json(m);
  }
  Session next = s;
  detail::record(next, "SuggestionResolved", payload, timestamp);
  s = std::move(next);
}

inline void signal_consensus(Session& s, PlayerChannel player, const std::string& timestamp = utc_timestamp()) {
  Session next = s;
  detail::record(next, "ConsensusSignaled", {{"player", detail::name(player)}}, timestamp);
  s = std::move(next);
}

/// Folds a journal into a session. Errors name the failing event index.
inline Session replay(const std::vector<Event>& journal) {
  Session s;
  for (std::size_t i = 0; i < journal.size(); ++i) {
    try {
      detail::apply_event(s, journal[i]);
    } catch (const Error& e) {
      throw Error(ErrorCode::Replay, "event " + std::to_string(i) + ": " + e.what(), std::to_string(i));
    }
  }
  if (journal.empty()) throw Error(ErrorCode::Replay, "journal is empty");
  return s;
}

// ---------------------------------------------------------------------------
// Analytics

struct ChannelStats {
  std::size_t stroke_count = 0;
  double ink_length_mm = 0.0;
  std::size_t rounds = 0;

  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

/// Per channel: strokes on the canvas, their summed arc length, and rounds
/// played (the theme counts as no round).
inline std::map<PlayerChannel, ChannelStats> contribution_stats(const Session& s) {
  std::map<PlayerChannel, ChannelStats> out;
  for (auto c : kAllChannels) out[c] = {};
  for (const auto& st : s.all_strokes()) {
    auto& e = out[st.channel];
    ++e.stroke_count;
    e.ink_length_mm += arc_length(st.points);
  }
  for (const auto& r : s.rounds) ++out[r.player].rounds;
  return out;
}

inline nlohmann::json to_json(const std::map<PlayerChannel, ChannelStats>& stats) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [c, st] : stats)
    j[std::string(to_string(c))] = {
        {"stroke_count", st.stroke_count}, {"ink_length_mm", st.ink_length_mm}, {"rounds", st.rounds}};
  return j;
}

// ---------------------------------------------------------------------------
// State and journal files

inline nlohmann::json to_json(const Round& r) {
  nlohmann::json j = {{"index", r.index}, {"player", detail::name(r.player)}, {"strokes", to_json(r.strokes_added)}};
  if (r.suggestion_meta) {
    const auto& m = *r.suggestion_meta;
    j["suggestion"] = to_json(m.request);
    j["suggestion"]["decision"] = to_string(m.decision);
  }
  return j;
}

inline nlohmann::json to_json(const Session& s) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& r : s.rounds) rounds.push_back(to_json(r));
  return {{"id", s.id},
          {"canvas", {s.canvas.width, s.canvas.height}},
          {"status", to_string(s.status)},
          {"turn_order", detail::channels_to_json(s.turn_order)},
          {"next_player", s.status == SessionStatus::Open ? nlohmann::json(detail::name(s.next_player())) : nlohmann::json(nullptr)},
          {"round", s.rounds.size()},
          {"blank_start", s.blank_start()},
          {"theme", to_json(s.theme)},
          {"rounds", rounds},
          {"pending_suggestion", s.pending ? to_json(*s.pending) : nlohmann::json(nullptr)},
          {"consensus", {{"red", s.red_consensus}, {"green", s.green_consensus}}},
          {"sketch", to_json(s.sketch())},
          {"journal_length", s.journal.size()}};
}

inline std::string journal_line(const Event& e) { return to_json(e).dump() + "\n"; }

inline void write_journal(const std::filesystem::path& path, const std::vector<Event>& journal) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  for (const auto& e : journal) out << journal_line(e);
  if (!out) throw Error(ErrorCode::Io, "cannot write journal " + path.string());
}

inline void append_journal(const std::filesystem::path& path, const Event& e) {
  std::ofstream out(path, std::ios::app);
  out << journal_line(e);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "cannot append to journal " + path.string());
}

/// One JSON event per line; blank lines are ignored.
inline std::vector<Event> read_journal(std::istream& in) {
  std::vector<Event> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Replay, "event " + std::to_string(index) + ": malformed journal line: " + e.what(),
                  std::to_string(index));
    }
    ++index;
  }
  return out;
}

inline std::vector<Event> load_journal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open journal " + path.string());
  return read_journal(in);
}

}  // namespace sketchplay

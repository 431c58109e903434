#include <gtest/gtest.h>

#include <thread>

#include "session_support.hpp"
#include "sketchplay/service.hpp"

using namespace sketchplay;
using namespace testing_support;

namespace {

const CanvasSize kCanvas{160, 120};

std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("sketchplay_" + name);
  std::filesystem::remove_all(d);
  return d;
}

/// Engine plus HTTP service on a free local port, torn down on scope exit.
class Running {
 public:
  explicit Running(const std::filesystem::path& dir, bool with_model = true) {
    EngineConfig cfg;
    cfg.data_dir = dir;
    cfg.projector_width = 320;
    cfg.projector_height = 240;
    std::shared_ptr<const Completer> model;
    if (with_model) model = std::make_shared<ModelCompleter>(tiny_checkpoint());
    engine_ = std::make_unique<Engine>(cfg, model);
    service_ = std::make_unique<Service>(*engine_);
    port_ = service_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { service_->listen_after_bind(); });
    service_->wait_until_ready();
  }
  ~Running() {
    service_->stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }
  Engine& engine() { return *engine_; }

 private:
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<Service> service_;
  int port_ = 0;
  std::thread thread_;
};

nlohmann::json body_of(const httplib::Result& r) { return nlohmann::json::parse(r->body); }

Sketch sketch_of(std::vector<Stroke> strokes) {
  Sketch s;
  s.canvas = kCanvas;
  s.strokes = std::move(strokes);
  return s;
}

nlohmann::json create_body(const std::string& id) {
  return {{"id", id},
          {"canvas", {kCanvas.width, kCanvas.height}},
          {"theme", to_json(sketch_of({{{{20, 20}, {60, 25}}, PlayerChannel::Black}}))}};
}

httplib::Result post(httplib::Client& c, const std::string& path, const nlohmann::json& body) {
  return c.Post(path, body.dump(), "application/json");
}

void play_to_machine(httplib::Client& c, const std::string& id) {
  ASSERT_EQ(post(c, "/sessions/" + id + "/strokes",
                 {{"player", "red"}, {"sketch", to_json(sketch_of({{{{30, 60}, {90, 70}}, PlayerChannel::Red}}))}})
                ->status,
            200);
  ASSERT_EQ(post(c, "/sessions/" + id + "/strokes",
                 {{"player", "green"}, {"sketch", to_json(sketch_of({{{{100, 30}, {140, 90}}, PlayerChannel::Green}}))}})
                ->status,
            200);
}

}  // namespace

TEST(Service, HealthAndCrud) {
  Running svc(fresh_dir("crud"));
  auto c = svc.client();
  auto h = c.Get("/healthz");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  EXPECT_EQ(body_of(h)["status"], "ok");

  auto created = post(c, "/sessions", create_body("g1"));
  ASSERT_EQ(created->status, 201);
  EXPECT_EQ(body_of(created)["id"], "g1");
  auto got = c.Get("/sessions/g1");
  EXPECT_EQ(got->status, 200);
  EXPECT_EQ(got->body, created->body);

  auto anon = post(c, "/sessions", nlohmann::json::object());
  ASSERT_EQ(anon->status, 201);
  EXPECT_EQ(body_of(anon)["id"].get<std::string>().size(), 16u);
}

TEST(Service, ErrorsAreStructured) {
  Running svc(fresh_dir("errors"));
  auto c = svc.client();
  post(c, "/sessions", create_body("g1"));

  auto turn = post(c, "/sessions/g1/strokes",
                   {{"player", "green"}, {"sketch", to_json(sketch_of({{{{1, 1}, {5, 5}}, PlayerChannel::Green}}))}});
  EXPECT_EQ(turn->status, 409);
  const auto j = body_of(turn);
  EXPECT_EQ(j["code"], "turn_violation");
  EXPECT_EQ(j["detail"], "red");
  EXPECT_TRUE(j["message"].is_string());

  auto blue = post(c, "/sessions/g1/strokes",
                   {{"player", "red"}, {"sketch", to_json(sketch_of({{{{1, 1}, {5, 5}}, PlayerChannel::Blue}}))}});
  EXPECT_EQ(blue->status, 422);
  EXPECT_NE(body_of(blue)["message"].get<std::string>().find("not assigned to any player"), std::string::npos);

  EXPECT_EQ(c.Get("/sessions/nope")->status, 404);
  EXPECT_EQ(body_of(c.Get("/sessions/nope"))["code"], "not_found");
  EXPECT_EQ(c.Post("/sessions/g1/strokes", "{oops", "application/json")->status, 400);
  EXPECT_EQ(post(c, "/sessions", create_body("g1"))->status, 400);
  EXPECT_EQ(post(c, "/sessions/g1/consensus", {{"player", "blue"}})->status, 422);
}

TEST(Service, CompletionIsDeterministicAcrossIdenticalSessions) {
  Running svc(fresh_dir("determinism"));
  auto c = svc.client();
  std::vector<std::string> payloads;
  for (const std::string id : {"a", "b"}) {
    post(c, "/sessions", create_body(id));
    play_to_machine(c, id);
    auto r = post(c, "/sessions/" + id + "/complete", {{"policy", "emitter"}, {"amount", 2}, {"temperature", 0.4}, {"seed", 7}});
    ASSERT_EQ(r->status, 200) << r->body;
    payloads.push_back(r->body);
  }
  EXPECT_EQ(payloads[0], payloads[1]);
  const auto j = nlohmann::json::parse(payloads[0]);
  EXPECT_EQ(j["context"]["stroke_ids"], nlohmann::json::array({0}));
  EXPECT_EQ(j["suggestion"]["policy"], "emitter");
  EXPECT_EQ(j["checkpoint_id"], tiny_checkpoint().id);

  auto again = post(c, "/sessions/a/complete", {{"policy", "emitter"}});
  EXPECT_EQ(again->status, 409);
}

TEST(Service, EmptyEmitterContextIsReported) {
  Running svc(fresh_dir("empty_ctx"));
  auto c = svc.client();
  post(c, "/sessions", {{"id", "e"}, {"canvas", {kCanvas.width, kCanvas.height}}});
  play_to_machine(c, "e");
  auto r = post(c, "/sessions/e/complete", {{"policy", "emitter"}});
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(body_of(r)["code"], "empty_context");
}

TEST(Service, NoModelLoaded) {
  Running svc(fresh_dir("nomodel"), false);
  auto c = svc.client();
  post(c, "/sessions", create_body("g"));
  play_to_machine(c, "g");
  EXPECT_EQ(post(c, "/sessions/g/complete", {{"policy", "receptor"}})->status, 404);
}

TEST(Service, ResolveConsensusAndStats) {
  Running svc(fresh_dir("resolve"));
  auto c = svc.client();
  post(c, "/sessions", create_body("g"));
  play_to_machine(c, "g");
  const auto sug = body_of(post(c, "/sessions/g/complete", {{"policy", "receptor"}, {"amount", 1}, {"seed", 2}}));
  const auto accepted = body_of(post(c, "/sessions/g/resolve", {{"decision", "accept"}}));
  EXPECT_EQ(accepted["next_player"], "red");
  EXPECT_TRUE(accepted["pending_suggestion"].is_null());
  const auto stats = body_of(c.Get("/sessions/g/stats"));
  EXPECT_EQ(stats["blue"]["stroke_count"], sug["proposal"]["strokes"].size());
  EXPECT_EQ(stats["red"]["stroke_count"], 1);
  EXPECT_EQ(stats["red"]["rounds"], 1);
  EXPECT_EQ(stats["black"]["rounds"], 0);
  post(c, "/sessions/g/consensus", {{"player", "red"}});
  const auto closed = body_of(post(c, "/sessions/g/consensus", {{"player", "green"}}));
  EXPECT_EQ(closed["status"], "closed");
  EXPECT_EQ(post(c, "/sessions/g/strokes", {{"player", "red"}, {"sketch", to_json(sketch_of({}))}})->status, 409);
}

TEST(Service, RestartPreservesStateByteForByte) {
  const auto dir = fresh_dir("restart");
  std::string before, stats_before;
  {
    Running svc(dir);
    auto c = svc.client();
    post(c, "/sessions", create_body("r"));
    play_to_machine(c, "r");
    post(c, "/sessions/r/complete", {{"policy", "receptor"}, {"amount", 2}, {"temperature", 0.3}, {"seed", 11}});
    post(c, "/sessions/r/resolve", {{"decision", "reject"}});
    before = c.Get("/sessions/r")->body;
    stats_before = c.Get("/sessions/r/stats")->body;
  }
  Running svc(dir);
  auto c = svc.client();
  EXPECT_EQ(c.Get("/sessions/r")->body, before);
  EXPECT_EQ(c.Get("/sessions/r/stats")->body, stats_before);
}

TEST(Service, OverlayPng) {
  Running svc(fresh_dir("overlay"));
  auto c = svc.client();
  post(c, "/sessions", create_body("o"));
  play_to_machine(c, "o");
  post(c, "/sessions/o/complete", {{"policy", "receptor"}, {"amount", 2}, {"seed", 4}});
  auto r = c.Get("/sessions/o/suggestion.png");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  // Composited on white by the decoder: blue where the suggestion is.
  const Raster img = decode_png(r->body);
  EXPECT_EQ(img.width, 320u);
  EXPECT_EQ(img.height, 240u);
  std::size_t blue = 0;
  for (std::size_t i = 0; i < img.width * img.height; ++i)
    if (img.get(i) == channel_color(PlayerChannel::Blue)) ++blue;
  EXPECT_GT(blue, 0u);
  const Raster white = decode_png(c.Get("/sessions/o/suggestion.png?illumination=white")->body);
  EXPECT_EQ(white, Raster(320, 240));
}

TEST(Service, CaptureUploadAddsPlayersStrokes) {
  Running svc(fresh_dir("capture"));
  auto c = svc.client();
  post(c, "/sessions", create_body("cap"));
  const Sketch state = sketch_from_json(body_of(c.Get("/sessions/cap"))["sketch"]);
  Sketch painted = state;
  const Stroke red{{{20, 80}, {70, 85}, {120, 78}}, PlayerChannel::Red};
  painted.strokes.push_back(red);
  const std::string png = encode_png(render_sketch(painted, Homography::scaling(4, 4), 640, 480, 3));
  httplib::MultipartFormDataItems items{{"image", png, "capture.png", "image/png"}, {"player", "red", "", ""}};
  auto r = c.Post("/sessions/cap/capture", items);
  ASSERT_EQ(r->status, 200) << r->body;
  const auto j = body_of(r);
  ASSERT_EQ(j["added"]["strokes"].size(), 1u);
  const Stroke got = stroke_from_json(j["added"]["strokes"][0]);
  EXPECT_EQ(got.channel, PlayerChannel::Red);
  EXPECT_LE(hausdorff(got.points, red.points), 0.5);
  EXPECT_EQ(j["session"]["next_player"], "green");
}

TEST(Service, CalibrationEndpoint) {
  const auto dir = fresh_dir("calib");
  {
    Running svc(dir);
    auto c = svc.client();
    const auto corr = nlohmann::json::parse(R"({"sets": [{"from": "camera", "to": "canvas",
        "pairs": [[[0, 0], [0, 0]], [[100, 0], [50, 0]], [[100, 100], [50, 50]], [[0, 100], [0, 50]]]}]})");
    auto r = post(c, "/calibration", corr);
    ASSERT_EQ(r->status, 200) << r->body;
    EXPECT_NEAR(body_of(r)["rmse"]["camera->canvas"].get<double>(), 0.0, 1e-9);
    auto bad = post(c, "/calibration", nlohmann::json::parse(R"({"sets": [{"from": "camera", "to": "canvas",
        "pairs": [[[0, 0], [0, 0]], [[1, 0], [1, 0]], [[2, 0], [2, 0]], [[0, 1], [0, 1]]]}]})"));
    EXPECT_EQ(bad->status, 422);
    EXPECT_EQ(body_of(bad)["code"], "degenerate_configuration");
  }
  Running svc(dir);
  EXPECT_TRUE(body_of(svc.client().Get("/healthz"))["calibrated"].get<bool>());
}

TEST(Service, EventStreamDeliversJournal) {
  Running svc(fresh_dir("events"));
  auto c = svc.client();
  post(c, "/sessions", create_body("ev"));
  std::string received;
  std::thread writer([&] {
    auto w = svc.client();
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    play_to_machine(w, "ev");
  });
  auto stream = svc.client();
  stream.Get("/sessions/ev/events", [&](const char* data, std::size_t n) {
    received.append(data, n);
    return received.find("id: 2\n") == std::string::npos;
  });
  writer.join();
  EXPECT_NE(received.find("event: SessionCreated"), std::string::npos);
  EXPECT_NE(received.find("event: StrokesSubmitted"), std::string::npos);
  const auto pos = received.find("id: 1\nevent: StrokesSubmitted\ndata: ");
  ASSERT_NE(pos, std::string::npos);
  const auto start = pos + std::string("id: 1\nevent: StrokesSubmitted\ndata: ").size();
  const auto msg = nlohmann::json::parse(received.substr(start, received.find('\n', start) - start));
  EXPECT_EQ(msg["event"], "StrokesSubmitted");
  EXPECT_EQ(msg["round"], 0);
  EXPECT_EQ(msg["payload"]["player"], "red");
  EXPECT_EQ(c.Get("/sessions/none/events")->status, 404);
}

#include <gtest/gtest.h>

#include <cmath>

#include "sketchplay/calibration.hpp"
#include "test_support.hpp"

using namespace sketchplay;

namespace {

CalibrationSet make_set(const Homography& h, const std::vector<Point>& src) {
  CalibrationSet s;
  for (const Point& p : src) s.pairs.push_back({p, map_point(h, p)});
  return s;
}

void expect_matrix_near(const Homography& a, const Homography& b, double tol) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(a(r, c), b(r, c), tol) << r << "," << c;
}

const std::vector<Point> kUnitSquare{{0, 0}, {1, 0}, {1, 1}, {0, 1}};

}  // namespace

TEST(SolveHomography, IdentityFromUnitSquare) {
  expect_matrix_near(solve_homography(make_set(Homography::identity(), kUnitSquare)), Homography::identity(), 1e-10);
}

TEST(SolveHomography, Translation) {
  const Homography h = solve_homography(make_set(Homography::translation(5, 7), kUnitSquare));
  expect_matrix_near(h, Homography::translation(5, 7), 1e-10);
  EXPECT_TRUE(std::abs(h(2, 0)) < 1e-12 && std::abs(h(2, 1)) < 1e-12);
}

TEST(SolveHomography, RecoversRandomMapFromEightPoints) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Homography truth({1 + rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-50, 50),
                            rng.uniform(-0.2, 0.2), 1 + rng.uniform(-0.2, 0.2), rng.uniform(-50, 50),
                            rng.uniform(-1e-4, 1e-4), rng.uniform(-1e-4, 1e-4), 1});
    std::vector<Point> src;
    for (int i = 0; i < 8; ++i) src.push_back({rng.uniform(0, 1000), rng.uniform(0, 800)});
    const auto set = make_set(truth, src);
    const Homography got = solve_homography(set);
    expect_matrix_near(got, truth, 1e-6);
    EXPECT_NEAR(reprojection_rmse(got, set), 0.0, 1e-9);
  }
}

TEST(SolveHomography, DegenerateNamesCollinearTriple) {
  CalibrationSet s = make_set(Homography::identity(), {{0, 0}, {1, 0}, {2, 0}, {0, 1}});
  try {
    solve_homography(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Degenerate);
    EXPECT_EQ(e.detail(), "0,1,2");
    EXPECT_NE(std::string(e.what()).find("0, 1 and 2"), std::string::npos);
  }
  CalibrationSet line = make_set(Homography::identity(), {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}});
  EXPECT_THROW(solve_homography(line), Error);
  EXPECT_THROW(solve_homography(make_set(Homography::identity(), {{0, 0}, {1, 0}, {0, 1}})), Error);
}

TEST(SolveHomography, CommonScaleLeavesPointImagesUnchanged) {
  Rng rng(8);
  const Homography truth({1.1, 0.05, 20, -0.03, 0.95, 12, 2e-4, -1e-4, 1});
  std::vector<Point> src;
  for (int i = 0; i < 10; ++i) src.push_back({rng.uniform(0, 500), rng.uniform(0, 500)});
  const auto set = make_set(truth, src);
  CalibrationSet scaled = set;
  const double k = 37.5;
  for (auto& c : scaled.pairs) {
    c.source = k * c.source;
    c.destination = k * c.destination;
  }
  const Homography a = solve_homography(set), b = solve_homography(scaled);
  for (int i = 0; i < 20; ++i) {
    const Point p{rng.uniform(0, 500), rng.uniform(0, 500)};
    const Point pa = k * map_point(a, p), pb = map_point(b, k * p);
    EXPECT_NEAR(pa.x, pb.x, 1e-6 * k);
    EXPECT_NEAR(pa.y, pb.y, 1e-6 * k);
  }
}

TEST(MapPoint, InverseAndTranslation) {
  const Homography h({0.9, 0.1, 5, -0.2, 1.1, 3, 1e-3, 2e-3, 1});
  const Point p{12.5, -7.25};
  const Point back = map_point(h.inverse(), map_point(h, p));
  EXPECT_NEAR(back.x, p.x, 1e-9);
  EXPECT_NEAR(back.y, p.y, 1e-9);
  EXPECT_EQ(map_point(Homography::translation(3, 4), {1, 2}), (Point{4, 6}));
  EXPECT_EQ(map_point(Homography::identity(), p), p);
  const Homography vanish({1, 0, 0, 0, 1, 0, 1, 0, 1});
  try {
    map_point(vanish, {-1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PointAtInfinity);
  }
}

TEST(Rmse, SingleCorrespondenceError) {
  CalibrationSet s;
  s.pairs.push_back({{0, 0}, {3, 0}});
  EXPECT_DOUBLE_EQ(reprojection_rmse(Homography::identity(), s), 3.0);
  EXPECT_THROW(reprojection_rmse(Homography::identity(), CalibrationSet{}), Error);
}

TEST(Rmse, GaussianNoiseMatchesDegreesOfFreedom) {
  // Point noise of rms magnitude sigma = 1 (sigma / sqrt(2) per coordinate).
  // Fitting 8 parameters to 2n coordinates leaves a residual rms of about
  // sigma * sqrt(1 - 8 / (2n)).
  Rng rng(77);
  const Homography truth({1.05, 0.02, 30, 0.01, 0.97, -20, 5e-5, -3e-5, 1});
  double acc = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    CalibrationSet s;
    for (int i = 0; i < 20; ++i) {
      const Point p{rng.uniform(0, 1000), rng.uniform(0, 1000)};
      const Point q = map_point(truth, p);
      s.pairs.push_back({p, {q.x + rng.normal() / std::sqrt(2.0), q.y + rng.normal() / std::sqrt(2.0)}});
    }
    const double r = reprojection_rmse(solve_homography(s), s);
    acc += r * r;
  }
  EXPECT_NEAR(std::sqrt(acc / trials), std::sqrt(1.0 - 8.0 / 40.0), 0.05);
}

TEST(Markers, FourMarkerLayout) {
  const auto m = marker_pattern(4, 1920, 1080);
  EXPECT_EQ(m.points, (std::vector<Point>{{192, 108}, {1728, 108}, {192, 972}, {1728, 972}}));
  EXPECT_THROW(marker_pattern(3, 1920, 1080), Error);
  EXPECT_THROW(marker_pattern(5000, 1920, 1080), Error);
}

TEST(Markers, RenderedPatternIsRedetected) {
  for (std::size_t n : {4u, 9u, 12u, 20u}) {
    const auto m = marker_pattern(n, 1280, 720);
    const auto found = detect_markers(render_marker_pattern(m), n, m.cols);
    ASSERT_EQ(found.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_LE(distance(found[i], m.points[i]), 0.5) << n << " " << i;
  }
}

TEST(Markers, CameraLoopRecoversProjectorMap) {
  // The camera sees projector markers through a mild perspective map.
  const auto m = marker_pattern(12, 1280, 720);
  const Homography proj_to_cam({0.8, 0.03, 40, -0.02, 0.82, 30, 2e-5, 1e-5, 1});
  Sketch seen;
  for (const Point& p : m.points) seen.strokes.push_back({{map_point(proj_to_cam, p)}, PlayerChannel::Black});
  const Raster capture = render_sketch(seen, Homography::identity(), 1200, 700, 2 * m.radius * 0.8);
  const auto found = detect_markers(capture, m.points.size(), m.cols);
  CalibrationSet s;
  s.from = Frame::Camera;
  s.to = Frame::Projector;
  for (std::size_t i = 0; i < found.size(); ++i) s.pairs.push_back({found[i], m.points[i]});
  const Homography h = solve_homography(s);
  EXPECT_LT(reprojection_rmse(h, s), 0.5);
  const Point probe = map_point(h, map_point(proj_to_cam, {640, 360}));
  EXPECT_LT(distance(probe, {640, 360}), 1.0);
}

TEST(FrameGraph, ComposesBothWays) {
  FrameGraph g;
  g.set(Frame::Camera, Frame::Canvas, Homography::scaling(0.5, 0.5));
  g.set(Frame::Canvas, Frame::Projector, Homography::translation(10, 20));
  const Point p = map_point(g.get(Frame::Camera, Frame::Projector), {4, 6});
  EXPECT_EQ(p, (Point{12, 23}));
  const Point q = map_point(g.get(Frame::Projector, Frame::Camera), p);
  EXPECT_NEAR(q.x, 4, 1e-12);
  EXPECT_NEAR(q.y, 6, 1e-12);
  g.set(Frame::Projector, Frame::Canvas, Homography::translation(-1, -1));
  EXPECT_EQ(map_point(g.get(Frame::Canvas, Frame::Projector), {0, 0}), (Point{1, 1}));
}

TEST(CalibrationFile, RoundTrip) {
  const auto corr = nlohmann::json::parse(R"({"sets": [{"from": "camera", "to": "canvas",
      "pairs": [[[0, 0], [0, 0]], [[100, 0], [50, 0]], [[100, 100], [50, 50]], [[0, 100], [0, 50]]]}]})");
  const auto c = calibrate(correspondences_from_json(corr), "2026-01-01T00:00:00Z");
  const auto j = to_json(c);
  EXPECT_EQ(j["frames"].size(), 3u);
  EXPECT_EQ(j["timestamp"], "2026-01-01T00:00:00Z");
  EXPECT_NEAR(j["rmse"]["camera->canvas"].get<double>(), 0.0, 1e-9);
  const auto back = calibration_from_json(j);
  expect_matrix_near(back.frames.get(Frame::Camera, Frame::Canvas), Homography::scaling(0.5, 0.5), 1e-12);
  EXPECT_THROW(correspondences_from_json(nlohmann::json::parse(R"({"sets": [{"from": "moon", "to": "canvas", "pairs": []}]})")),
               Error);
}

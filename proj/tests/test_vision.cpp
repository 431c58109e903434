#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "sketchplay/png_io.hpp"
#include "sketchplay/render.hpp"
#include "sketchplay/vision.hpp"
#include "test_support.hpp"

using namespace sketchplay;

namespace {

constexpr double kPxPerMm = 4.0;
const CanvasSize kCanvas{160, 120};
const Homography kMmToPx = Homography::scaling(kPxPerMm, kPxPerMm);
const Homography kPxToMm = Homography::scaling(1 / kPxPerMm, 1 / kPxPerMm);

Raster render(const Sketch& s) { return render_sketch(s, kMmToPx, 640, 480, 3.0); }

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / v.size());
}

Mask bar(std::size_t w, std::size_t h, std::size_t x0, std::size_t x1, std::size_t y0, std::size_t y1) {
  Mask m(w, h);
  for (std::size_t y = y0; y <= y1; ++y)
    for (std::size_t x = x0; x <= x1; ++x) m.put(x, y, true);
  return m;
}

}  // namespace

TEST(Png, RoundTrip) {
  Raster r(7, 5, {10, 20, 30});
  r.put(3, 2, {250, 0, 128});
  EXPECT_EQ(decode_png(encode_png(r)), r);
  EXPECT_THROW(decode_png("not a png"), Error);
}

TEST(FlatField, UniformGrayStaysUniform) {
  const Raster out = flat_field_correct(Raster(64, 48, {128, 128, 128}));
  for (std::size_t i = 0; i < 64 * 48; ++i) EXPECT_EQ(out.get(i), out.get(0));
}

TEST(FlatField, LinearIlluminationGradientIsFlattened) {
  // White canvas lit from 120 on the left to 240 on the right, with dark ink.
  Sketch ink;
  ink.canvas = kCanvas;
  ink.strokes.push_back({{{20, 20}, {140, 100}}, PlayerChannel::Black});
  const Raster clean = render(ink);
  Raster lit = clean;
  for (std::size_t y = 0; y < lit.height; ++y)
    for (std::size_t x = 0; x < lit.width; ++x) {
      const double g = (120.0 + 120.0 * x / (lit.width - 1)) / 255.0;
      Rgb c = clean.at(x, y);
      for (auto& v : c) v = static_cast<std::uint8_t>(std::lround(v * g));
      lit.put(x, y, c);
    }
  const Raster out = flat_field_correct(lit);

  std::vector<double> before, after;
  double ink_in = 0, ink_out = 0, bg_in = 0, bg_out = 0;
  std::size_t ink_n = 0, bg_n = 0;
  for (std::size_t y = 0; y < lit.height; ++y)
    for (std::size_t x = 0; x < lit.width; ++x) {
      const bool is_ink = clean.at(x, y)[0] < 128;
      if (!is_ink) {
        before.push_back(lit.at(x, y)[0]);
        after.push_back(out.at(x, y)[0]);
      }
      // Contrast is measured locally around the middle of the stroke.
      if (x > 300 && x < 340) {
        if (is_ink) {
          ink_in += lit.at(x, y)[0], ink_out += out.at(x, y)[0], ++ink_n;
        } else {
          bg_in += lit.at(x, y)[0], bg_out += out.at(x, y)[0], ++bg_n;
        }
      }
    }
  EXPECT_GT(std_of(before) / mean_of(before), 0.15);
  EXPECT_LT(std_of(after) / mean_of(after), 0.05);
  const double c_in = 1.0 - (ink_in / ink_n) / (bg_in / bg_n);
  const double c_out = 1.0 - (ink_out / ink_n) / (bg_out / bg_n);
  EXPECT_GE(c_out, 0.8 * c_in);
}

TEST(Classify, SinglePixels) {
  const ColorPalette p;
  EXPECT_EQ(p.classify({200, 0, 0}), PlayerChannel::Red);
  EXPECT_EQ(p.classify({30, 30, 30}), PlayerChannel::Black);
  EXPECT_EQ(p.classify({30, 160, 60}), PlayerChannel::Green);
  EXPECT_EQ(p.classify({30, 60, 200}), PlayerChannel::Blue);
  EXPECT_EQ(p.classify({255, 255, 255}), std::nullopt);
  EXPECT_EQ(p.classify({200, 200, 40}), std::nullopt);
  EXPECT_NO_THROW(p.validate());
}

TEST(Classify, FourSquaresRecall) {
  Raster img(200, 200);
  std::array<Mask, 4> truth;
  for (auto& m : truth) m = Mask(200, 200);
  for (std::size_t c = 0; c < 4; ++c) {
    const std::size_t x0 = 20 + (c % 2) * 90, y0 = 20 + (c / 2) * 90;
    for (std::size_t y = y0; y < y0 + 70; ++y)
      for (std::size_t x = x0; x < x0 + 70; ++x) {
        img.put(x, y, channel_color(kAllChannels[c]));
        truth[c].put(x, y, true);
      }
  }
  const auto masks = classify_channels(img, ColorPalette{});
  for (std::size_t c = 0; c < 4; ++c) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth[c].bits.size(); ++i) hit += truth[c].bits[i] && masks.masks[c].bits[i];
    EXPECT_GE(static_cast<double>(hit) / truth[c].count(), 0.99) << c;
  }
}

TEST(Classify, MasksAreDisjoint) {
  Rng rng(4);
  Raster img(64, 64);
  for (auto& b : img.pixels) b = static_cast<std::uint8_t>(rng.below(256));
  const auto masks = classify_channels(img, ColorPalette{});
  for (std::size_t i = 0; i < 64 * 64; ++i) {
    int n = 0;
    for (const auto& m : masks.masks) n += m.bits[i];
    EXPECT_LE(n, 1);
  }
}

TEST(Classify, PaletteValidation) {
  ColorPalette p;
  p.reference[2] = p.reference[1];
  EXPECT_THROW(p.validate(), Error);
  EXPECT_THROW(palette_from_json({{"reference", {{"purple", {1, 2, 3}}}}}), Error);
  EXPECT_EQ(palette_from_json({{"hue_tolerance", 30}}).hue_tolerance, 30);
}

TEST(Skeleton, ThinLineUnchanged) {
  const Mask line = bar(40, 10, 5, 30, 4, 4);
  EXPECT_EQ(skeletonize(line), line);
}

TEST(Skeleton, ThickBarCenterline) {
  const Mask thick = bar(40, 10, 5, 30, 3, 5);
  const Mask s = skeletonize(thick);
  std::size_t xmin = 99, xmax = 0;
  for (std::size_t y = 0; y < 10; ++y)
    for (std::size_t x = 0; x < 40; ++x)
      if (s.at(x, y)) {
        EXPECT_EQ(y, 4u);
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
      }
  EXPECT_LE(xmin, 7u);
  EXPECT_GE(xmax, 28u);
}

TEST(Skeleton, DiagonalStrokeSurvives) {
  Sketch s;
  s.canvas = kCanvas;
  s.strokes.push_back({{{10, 30}, {40, 0.5}}, PlayerChannel::Blue});
  const Mask& ink = classify_channels(render(s), ColorPalette{})[PlayerChannel::Blue];
  const Mask skel = skeletonize(ink);
  // Every 10 px along the diagonal there is skeleton nearby.
  for (double t = 0.1; t < 0.95; t += 0.1) {
    const Point p{(10 + 30 * t) * kPxPerMm, (30 - 29.5 * t) * kPxPerMm};
    bool near = false;
    for (long dy = -2; dy <= 2; ++dy)
      for (long dx = -2; dx <= 2; ++dx) near = near || skel.get(std::lround(p.x) + dx, std::lround(p.y) + dy);
    EXPECT_TRUE(near) << t;
  }
}

TEST(Skeleton, EmptyStaysEmpty) { EXPECT_EQ(skeletonize(Mask(9, 9)).count(), 0u); }

TEST(Skeleton, MatchesReferenceAndIsIdempotent) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = testing_support::random_color_sketch(rng, kCanvas, 4, 3, 8);
    const auto masks = classify_channels(render(s), ColorPalette{});
    for (const auto& m : masks.masks) {
      std::vector<std::vector<int>> grid(m.height, std::vector<int>(m.width));
      for (std::size_t y = 0; y < m.height; ++y)
        for (std::size_t x = 0; x < m.width; ++x) grid[y][x] = m.at(x, y);
      const auto ref = testing_support::reference_zhang_suen(grid);
      const Mask ours = skeletonize(m);
      for (std::size_t y = 0; y < m.height; ++y)
        for (std::size_t x = 0; x < m.width; ++x) ASSERT_EQ(ours.at(x, y), ref[y][x] != 0);
      EXPECT_EQ(skeletonize(ours), ours);
    }
  }
}

TEST(Trace, StraightSegmentEndpoints) {
  Sketch s;
  s.canvas = kCanvas;
  s.strokes.push_back({{{10, 10}, {60, 40}}, PlayerChannel::Black});
  const auto masks = classify_channels(render(s), ColorPalette{});
  const Mask& ink = masks[PlayerChannel::Black];
  const auto strokes = trace_strokes(skeletonize(ink), Homography::identity(), PlayerChannel::Black, {}, &ink);
  ASSERT_EQ(strokes.size(), 1u);
  EXPECT_LE(distance(strokes[0].points.front(), {40, 40}), 2.0);
  EXPECT_LE(distance(strokes[0].points.back(), {240, 160}), 2.0);
}

TEST(Trace, PlusSignSplitsIntoFourAtJunction) {
  Mask m(41, 41);
  for (std::size_t i = 5; i <= 35; ++i) {
    m.put(i, 20, true);
    m.put(20, i, true);
  }
  const auto strokes = trace_strokes(skeletonize(m), Homography::identity());
  ASSERT_EQ(strokes.size(), 4u);
  for (const auto& s : strokes) {
    const bool touches = distance(s.points.front(), {20, 20}) <= 1.5 || distance(s.points.back(), {20, 20}) <= 1.5;
    EXPECT_TRUE(touches);
  }
}

TEST(Trace, EmptySkeleton) { EXPECT_TRUE(trace_strokes(Mask(10, 10), Homography::identity()).empty()); }

TEST(Trace, ClosedLoopAndOrdering) {
  Mask m(30, 30);
  for (std::size_t i = 5; i <= 20; ++i) {
    m.put(i, 5, true);
    m.put(i, 20, true);
    m.put(5, i, true);
    m.put(20, i, true);
  }
  const auto strokes = trace_strokes(m, Homography::identity());
  ASSERT_EQ(strokes.size(), 1u);
  EXPECT_EQ(strokes[0].points.front(), (Point{5, 5}));
  EXPECT_EQ(strokes[0].points.back(), (Point{5, 5}));
  EXPECT_EQ(strokes[0].points.size(), 5u);
}

TEST(Extract, SelfDifferenceIsEmpty) {
  Rng rng(2);
  const auto s = testing_support::random_color_sketch(rng, kCanvas, 4, 3, 6);
  EXPECT_TRUE(extract_new_strokes(s, render(s), ColorPalette{}, kPxToMm).empty());
}

TEST(Extract, NewRedStrokeIsReported) {
  Rng rng(3);
  Sketch prev = testing_support::random_color_sketch(rng, kCanvas, 4, 3, 4);
  prev.strokes.erase(std::remove_if(prev.strokes.begin(), prev.strokes.end(),
                                    [](const Stroke& s) { return s.points.front().y > 70; }),
                     prev.strokes.end());
  Sketch next = prev;
  const Stroke red{{{20, 95}, {70, 100}, {120, 92}}, PlayerChannel::Red};
  next.strokes.push_back(red);
  const auto delta = extract_new_strokes(prev, render(next), ColorPalette{}, kPxToMm);
  ASSERT_EQ(delta.strokes.size(), 1u);
  EXPECT_EQ(delta.strokes[0].channel, PlayerChannel::Red);
  EXPECT_LE(hausdorff(delta.strokes[0].points, red.points), 0.5);
}

TEST(Extract, DisplacedStrokeCountsAsNew) {
  Sketch prev;
  prev.canvas = kCanvas;
  prev.strokes.push_back({{{20, 50}, {120, 50}}, PlayerChannel::Green});
  Sketch moved = prev;
  for (auto& p : moved.strokes[0].points) p.y += 5;
  EXPECT_EQ(extract_new_strokes(prev, render(moved), ColorPalette{}, kPxToMm).strokes.size(), 1u);
  Sketch nudged = prev;
  for (auto& p : nudged.strokes[0].points) p.y += 1;
  EXPECT_TRUE(extract_new_strokes(prev, render(nudged), ColorPalette{}, kPxToMm).empty());
}

TEST(Blobs, CentroidsOfDiscs) {
  Sketch s;
  s.canvas = kCanvas;
  s.strokes.push_back({{{30.3, 40.7}}, PlayerChannel::Black});
  s.strokes.push_back({{{100.1, 20.2}}, PlayerChannel::Black});
  const Raster img = render_sketch(s, kMmToPx, 640, 480, 30.0);
  const auto blobs = detect_blobs(classify_channels(img, ColorPalette{})[PlayerChannel::Black], 20);
  ASSERT_EQ(blobs.size(), 2u);
  EXPECT_LE(distance(blobs[0].centroid, map_point(kMmToPx, {100.1, 20.2})), 0.5);
  EXPECT_LE(distance(blobs[1].centroid, map_point(kMmToPx, {30.3, 40.7})), 0.5);
}

TEST(Archive, RecoversAndReportsFailures) {
  Sketch three;
  three.canvas = kCanvas;
  three.strokes = {{{{10, 10}, {50, 15}}, PlayerChannel::Red},
                   {{{80, 60}, {120, 70}}, PlayerChannel::Red},
                   {{{30, 90}, {60, 110}}, PlayerChannel::Red}};
  const std::vector<Raster> captures{render(three), Raster(640, 480)};
  const auto r = ingest_artist_archive(captures, kPxToMm, ColorPalette{}, kCanvas);
  ASSERT_TRUE(r.failures.empty());
  ASSERT_EQ(r.sketches[0]->strokes.size(), 3u);
  for (const auto& s : r.sketches[0]->strokes) EXPECT_EQ(s.channel, PlayerChannel::Red);
  EXPECT_TRUE(r.sketches[1]->empty());

  const std::vector<std::filesystem::path> files{"/nonexistent/capture.png"};
  const auto bad = ingest_artist_archive(files, kPxToMm, ColorPalette{}, kCanvas);
  ASSERT_EQ(bad.failures.size(), 1u);
  EXPECT_EQ(bad.failures[0].index, 0u);
  EXPECT_FALSE(bad.sketches[0].has_value());
}

// tests/frontend_test.cc

// Copyright 2026 The vsrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "test_util.h"
#include "vsr/error.h"
#include "vsr/frontend.h"

namespace vsr {
namespace {

LandmarkFrame Corners(Point left, Point right) {
  LandmarkFrame f = testing::MakeFace(50, 50, 40, 0.1);
  f.points[kLeftMouthCorner] = left;
  f.points[kRightMouthCorner] = right;
  return f;
}

// Soft dark ellipse for the mouth with a brighter band, evaluated at any
// point; rotating the scene means evaluating it at rotated coordinates.
double Scene(double x, double y, Point c) {
  const double dx = (x - c.x) / 14.0, dy = (y - c.y) / 5.0;
  const double r2 = dx * dx + dy * dy;
  double v = 0.8 - 0.6 * std::exp(-r2);
  v += 0.15 * std::exp(-((y - c.y + 2.0) * (y - c.y + 2.0)) / 4.0) * std::exp(-dx * dx);
  return v;
}

GrayImage Render(int w, int h, Point c, double angle) {
  GrayImage img(w, h);
  const double cs = std::cos(-angle), sn = std::sin(-angle);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = x + 0.5 - c.x, dy = y + 0.5 - c.y;
      img.at(x, y) = static_cast<float>(Scene(c.x + cs * dx - sn * dy, c.y + sn * dx + cs * dy, c));
    }
  return img;
}

TEST_CASE("mouth alignment angle") {
  CHECK(MouthAlignmentAngle(Corners({0, 0}, {10, 0})) == 0.0);
  CHECK(MouthAlignmentAngle(Corners({0, 0}, {10, 5})) == doctest::Approx(0.4636476090));
  CHECK(MouthAlignmentAngle(Corners({0, 0}, {10, -5})) == doctest::Approx(-0.4636476090));
  CHECK(MouthAlignmentAngle(Corners({0, 0}, {0, 4})) == doctest::Approx(std::numbers::pi / 2));
  CHECK(MouthAlignmentAngle(Corners({0, 4}, {0, 0})) == doctest::Approx(std::numbers::pi / 2));
  CHECK(MouthAlignmentAngle(Corners({10, 0}, {0, 0})) == 0.0);
  CHECK_THROWS_AS(MouthAlignmentAngle(Corners({3, 3}, {3, 3})), DegenerateGeometryError);
}

TEST_CASE("mirroring negates the angle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 100; ++i) {
    LandmarkFrame f = testing::MakeFace(60, 40, 30, 0.1, u(rng));
    LandmarkFrame m = f;
    for (auto &p : m.points) p.x = 200.0 - p.x;
    const double a = MouthAlignmentAngle(f);
    const double b = MouthAlignmentAngle(m);
    if (std::abs(a - std::numbers::pi / 2) < 1e-12) continue;
    CHECK(b == doctest::Approx(-a).epsilon(1e-12));
  }
}

TEST_CASE("aligned corners are horizontal") {
  for (double deg : {-30.0, -12.0, 0.0, 7.0, 25.0}) {
    const LandmarkFrame f = testing::MakeFace(80, 60, 60, 0.2, deg * std::numbers::pi / 180);
    const LandmarkFrame a = RotateLandmarks(f, -MouthAlignmentAngle(f), MouthCentroid(f));
    CHECK(std::abs(MouthAlignmentAngle(a)) < 1e-6);
  }
}

TEST_CASE("zero angle crop samples the bounding box") {
  // A ramp is reproduced exactly by bilinear sampling away from the border.
  GrayImage img(120, 100);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(x, y) = 0.002f * (x + 0.5f) + 0.003f * (y + 0.5f);
  const LandmarkFrame f = testing::MakeFace(60, 40, 60, 0.15);
  REQUIRE(MouthAlignmentAngle(f) == 0.0);
  const double margin = 0.1;
  const MouthFrame roi = ExtractAlignedRoi(f, img, margin);
  double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
  for (int k = kMouthBegin; k < kMouthEnd; ++k) {
    x0 = std::min(x0, f.points[k].x);
    x1 = std::max(x1, f.points[k].x);
    y0 = std::min(y0, f.points[k].y);
    y1 = std::max(y1, f.points[k].y);
  }
  const double bw = x1 - x0, bh = y1 - y0;
  for (int i = 0; i < MouthFrame::kHeight; ++i)
    for (int j = 0; j < MouthFrame::kWidth; ++j) {
      const double x = x0 - margin * bw + (j + 0.5) * bw * 1.2 / MouthFrame::kWidth;
      const double y = y0 - margin * bh + (i + 0.5) * bh * 1.2 / MouthFrame::kHeight;
      CHECK(roi.pixels[i * MouthFrame::kWidth + j] == doctest::Approx(0.002 * x + 0.003 * y).epsilon(1e-5));
    }
}

TEST_CASE("rotation equivariance of the ROI") {
  const Point c{64, 48};
  const LandmarkFrame base = testing::MakeFace(c.x, c.y - 0.12 * 60, 60, 0.15);
  const Point mc = MouthCentroid(base);
  const GrayImage img0 = Render(128, 96, mc, 0.0);
  const MouthFrame ref = ExtractAlignedRoi(base, img0, 0.15);
  for (double deg = -30.0; deg <= 30.0; deg += 5.0) {
    const double th = deg * std::numbers::pi / 180;
    const LandmarkFrame rot = RotateLandmarks(base, th, mc);
    const MouthFrame out = ExtractAlignedRoi(rot, Render(128, 96, mc, th), 0.15);
    double diff = 0.0;
    for (int k = 0; k < MouthFrame::kSize; ++k) diff += std::abs(out.pixels[k] - ref.pixels[k]);
    CHECK_MESSAGE(diff / MouthFrame::kSize < 0.05, deg);
  }
}

TEST_CASE("ROI shape and intensity range") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  GrayImage img(90, 70);
  for (auto &p : img.pixels) p = u(rng);
  for (int i = 0; i < 20; ++i) {
    // Some faces spill over the border and get clamped.
    const LandmarkFrame f = testing::MakeFace(10 + 70 * u(rng), 10 + 50 * u(rng), 40 + 40 * u(rng),
                                              0.3 * u(rng), u(rng) - 0.5);
    const MouthFrame roi = ExtractAlignedRoi(f, img);
    CHECK(roi.pixels.size() == 512);
    for (float p : roi.pixels) {
      CHECK(p >= 0.0f);
      CHECK(p <= 1.0f);
    }
  }
}

TEST_CASE("degenerate crop") {
  LandmarkFrame f = testing::MakeFace(50, 50, 40, 0.1);
  for (int k = kMouthBegin; k < kMouthEnd; ++k) f.points[k].y = 50;
  CHECK_THROWS_AS(ExtractAlignedRoi(f, GrayImage(100, 100, 0.5f)), DegenerateGeometryError);
}

TEST_CASE("bilinear sampling") {
  GrayImage img(2, 2);
  img.at(0, 0) = 0.0f;
  img.at(1, 0) = 1.0f;
  img.at(0, 1) = 0.5f;
  img.at(1, 1) = 0.5f;
  CHECK(SampleBilinear(img, 0.5, 0.5) == 0.0f);
  CHECK(SampleBilinear(img, 1.0, 0.5) == doctest::Approx(0.5));
  CHECK(SampleBilinear(img, 1.0, 1.0) == doctest::Approx(0.5));
  CHECK(SampleBilinear(img, -5.0, 0.5) == 0.0f);  // edge replication
  CHECK(SampleBilinear(img, 9.0, -3.0) == 1.0f);
}

TEST_CASE("mouth frames file round trip") {
  testing::TempDir dir;
  std::mt19937_64 rng(2);
  std::vector<MouthFrame> frames = {testing::RandomMouthFrame(rng), testing::RandomMouthFrame(rng)};
  WriteMouthFrames(dir / "roi.frm", frames);
  const auto back = ReadMouthFrames(dir / "roi.frm");
  REQUIRE(back.size() == 2);
  for (int k = 0; k < MouthFrame::kSize; ++k)
    CHECK(std::abs(back[1].pixels[k] - frames[1].pixels[k]) <= 0.5f / 255.0f + 1e-6f);
  CHECK(back[1].frame_index == 1);
}

}  // namespace
}  // namespace vsr

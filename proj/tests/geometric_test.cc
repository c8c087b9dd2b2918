// tests/geometric_test.cc

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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "test_util.h"
#include "vsr/error.h"
#include "vsr/frontend.h"
#include "vsr/geometric.h"

namespace vsr {
namespace {

// Coordinates on a 1/1024 grid so that dyadic scaling and integer shifts
// are exact in floating point.
LandmarkFrame Snap(LandmarkFrame f) {
  for (auto &p : f.points) {
    p.x = std::round(p.x * 1024.0) / 1024.0;
    p.y = std::round(p.y * 1024.0) / 1024.0;
  }
  return f;
}

LandmarkFrame RandomFace(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LandmarkFrame f = testing::MakeFace(100 + 50 * u(rng), 80 + 40 * u(rng), 60 + 60 * u(rng),
                                      0.25 * u(rng), 0.6 * (u(rng) - 0.5));
  std::normal_distribution<double> jitter(0.0, 0.6);
  for (auto &p : f.points) p = p + Point{jitter(rng), jitter(rng)};
  return f;
}

LandmarkFrame Transform(const LandmarkFrame &f, double s, Point t) {
  LandmarkFrame out;
  for (int k = 0; k < kNumLandmarks; ++k) out.points[k] = s * f.points[k] + t;
  return out;
}

TEST_CASE("normalization scale") {
  LandmarkFrame f = testing::MakeFace(0, 0, 50, 0.1);
  f.points[2] = {0, 0};
  f.points[14] = {100, 0};
  const auto s = ComputeNormalizationScale(f);
  CHECK(s.unit_length == 100.0);
  CHECK(s.unit_area == 10000.0);
  const auto s3 = ComputeNormalizationScale(Transform(f, 3.0, {0, 0}));
  CHECK(s3.unit_length == doctest::Approx(300.0));
  f.points[14] = f.points[2];
  CHECK_THROWS_AS(ComputeNormalizationScale(f), DegenerateGeometryError);
}

TEST_CASE("square mouth") {
  const double s = 8.0;
  LandmarkFrame f = testing::MakeFace(0, 0, 50, 0.1);
  // Outer contour on the square with corners at 48, 51, 54, 57.
  const Point corners[4] = {{0, 0}, {s / 2, -s / 2}, {s, 0}, {s / 2, s / 2}};
  for (int k = 0; k < 12; ++k) {
    const Point a = corners[k / 3], b = corners[(k / 3 + 1) % 4];
    const double t = (k % 3) / 3.0;
    f.points[48 + k] = (1 - t) * a + t * b;
  }
  for (int k = 0; k < 8; ++k) f.points[60 + k] = {s / 4 + s / 2 * (k < 5 ? k / 4.0 : (8 - k) / 4.0), 0.0};
  f.points[2] = {-1.5 * s, 0};
  f.points[14] = {2.5 * s, 0};
  const auto g = GeometricFeatures(f);
  CHECK(g[0] == doctest::Approx(0.25));
  CHECK(g[1] == doctest::Approx(0.25));
  CHECK(g[8] == doctest::Approx(1.0));
  CHECK(g[4] == doctest::Approx(s * s / 2 / (16 * s * s)));  // the diamond is half the box
  CHECK(g[12] == doctest::Approx(std::numbers::pi / 2));
  CHECK(g[13] == doctest::Approx(std::numbers::pi / 2));
  // Inner contour collapsed onto a line.
  CHECK(g[3] == 0.0);
  CHECK(g[5] == 0.0);
  CHECK(g[9] == 0.0);
  CHECK(g[16] == 0.0);
}

TEST_CASE("closed mouth has zero inner height and area") {
  const auto g = GeometricFeatures(testing::MakeFace(50, 50, 80, 0.0));
  CHECK(g[3] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(g[5]) < 1e-12);
}

TEST_CASE("exact invariance to dyadic scaling and shifts") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    const LandmarkFrame f = Snap(RandomFace(rng));
    const auto ref = GeometricFeatures(f);
    for (double s : {0.25, 0.5, 2.0, 4.0, 64.0}) {
      const auto g = GeometricFeatures(Transform(f, s, {0, 0}));
      for (int k = 0; k < kNumGeometricFeatures; ++k) CHECK(g[k] == ref[k]);
    }
    const Point t{static_cast<double>(rng() % 400) - 200.0, static_cast<double>(rng() % 400) - 200.0};
    const auto g = GeometricFeatures(Transform(f, 1.0, t));
    for (int k = 0; k < kNumGeometricFeatures; ++k) CHECK(g[k] == ref[k]);
  }
}

TEST_CASE("near invariance to arbitrary scaling and shifts") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int i = 0; i < 100; ++i) {
    const LandmarkFrame f = RandomFace(rng);
    const auto ref = GeometricFeatures(f);
    const auto g = GeometricFeatures(Transform(f, u(rng), {u(rng) * 37, -u(rng) * 11}));
    for (int k = 0; k < kNumGeometricFeatures; ++k) CHECK(std::abs(g[k] - ref[k]) < 1e-9);
  }
}

TEST_CASE("rotation invariance") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const LandmarkFrame f = RandomFace(rng);
    const auto ref = GeometricFeatures(f);
    const auto g = GeometricFeatures(RotateLandmarks(f, u(rng), {u(rng) * 50, u(rng) * 50}));
    for (int k = 0; k < kNumGeometricFeatures; ++k) worst = std::max(worst, std::abs(g[k] - ref[k]));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("features are finite and named") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 50; ++i)
    for (double v : GeometricFeatures(RandomFace(rng))) CHECK(std::isfinite(v));
  CHECK(GeometricFeatureNames()[0] == "outer_width");
  CHECK(GeometricFeatureNames().size() == 18);
}

TEST_CASE("shoelace area matches Monte Carlo") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    // Convex polygon: sorted angles on a random ellipse.
    const int n = 6 + static_cast<int>(rng() % 10);
    const double a = 10 + 20 * u(rng), b = 3 + 10 * u(rng);
    std::vector<double> ang(n);
    for (auto &t : ang) t = 2 * std::numbers::pi * u(rng);
    std::sort(ang.begin(), ang.end());
    std::vector<Point> poly;
    for (double t : ang) poly.push_back({a * std::cos(t), b * std::sin(t)});
    auto inside = [&](double x, double y) {
      bool in = false;
      for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
        if ((poly[i].y > y) != (poly[j].y > y) &&
            x < (poly[j].x - poly[i].x) * (y - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x)
          in = !in;
      return in;
    };
    const int samples = 200000;
    int hits = 0;
    for (int s = 0; s < samples; ++s)
      hits += inside(a * (2 * u(rng) - 1), b * (2 * u(rng) - 1));
    const double mc = 4 * a * b * hits / samples;
    const double area = PolygonArea(poly);
    CHECK(std::abs(area - mc) / area < 0.02);
  }
}

TEST_CASE("polygon perimeter") {
  const std::vector<Point> sq = {{0, 0}, {3, 0}, {3, 4}, {0, 4}};
  CHECK(PolygonPerimeter(sq) == 14.0);
  CHECK(PolygonArea(sq) == 12.0);
  const std::vector<Point> rev(sq.rbegin(), sq.rend());
  CHECK(PolygonArea(rev) == 12.0);
}

}  // namespace
}  // namespace vsr

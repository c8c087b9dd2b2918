// src/geometric.cc

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

#include "vsr/geometric.h"

#include <cmath>

#include "vsr/error.h"
#include "vsr/frontend.h"

namespace vsr {

namespace {

double Distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Interior angle at `at` between the rays towards a and b.
double CornerAngle(Point at, Point a, Point b) {
  const Point u = a - at, v = b - at;
  return std::atan2(std::abs(u.x * v.y - u.y * v.x), u.x * v.x + u.y * v.y);
}

}  // namespace

double PolygonArea(std::span<const Point> polygon) {
  double twice = 0.0;
  for (size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++)
    twice += polygon[j].x * polygon[i].y - polygon[i].x * polygon[j].y;
  return std::abs(twice) / 2.0;
}

double PolygonPerimeter(std::span<const Point> polygon) {
  double total = 0.0;
  for (size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++)
    total += Distance(polygon[i], polygon[j]);
  return total;
}

NormalizationScale ComputeNormalizationScale(const LandmarkFrame &frame) {
  const double len = Distance(frame.points[2], frame.points[14]);
  if (!(len > 0.0)) throw DegenerateGeometryError("jaw landmarks 2 and 14 coincide");
  return {len, len * len};
}

const std::array<std::string, kNumGeometricFeatures> &GeometricFeatureNames() {
  static const std::array<std::string, kNumGeometricFeatures> kNames = {
      "outer_width",      "outer_height",       "inner_width",      "inner_height",
      "outer_area",       "inner_area",         "outer_perimeter",  "inner_perimeter",
      "outer_aspect",     "inner_aspect",       "upper_lip",        "lower_lip",
      "left_corner_angle", "right_corner_angle", "nose_offset_y",   "midline_offset_x",
      "area_ratio",       "opening_ratio"};
  return kNames;
}

GeometricFeatureVector GeometricFeatures(const LandmarkFrame &frame) {
  // Work relative to the left mouth corner so translations cancel before any
  // other arithmetic, then level the corners.
  LandmarkFrame rel;
  const Point origin = frame.points[kLeftMouthCorner];
  for (int k = 0; k < kNumLandmarks; ++k) rel.points[k] = frame.points[k] - origin;
  // Directed angle of 48->54, unfolded.
  const Point &r = rel.points[kRightMouthCorner];
  if (r.x == 0.0 && r.y == 0.0) throw DegenerateGeometryError("mouth corners 48 and 54 coincide");
  const double angle = std::atan2(r.y, r.x);
  const LandmarkFrame p = RotateLandmarks(rel, -angle, Point{0.0, 0.0});
  const NormalizationScale scale = ComputeNormalizationScale(p);
  const double L = scale.unit_length, A = scale.unit_area;
  const auto &q = p.points;

  std::array<Point, 12> outer;
  std::array<Point, 8> inner;
  for (int k = 0; k < 12; ++k) outer[k] = q[48 + k];
  for (int k = 0; k < 8; ++k) inner[k] = q[60 + k];

  const double outer_w = Distance(q[48], q[54]);
  const double outer_h = Distance(q[51], q[57]);
  const double inner_w = Distance(q[60], q[64]);
  const double inner_h = Distance(q[62], q[66]);
  const double outer_area = PolygonArea(outer);
  const double inner_area = PolygonArea(inner);

  Point centroid;
  for (int k = kMouthBegin; k < kMouthEnd; ++k) centroid = centroid + q[k];
  centroid = {centroid.x / 20.0, centroid.y / 20.0};
  const double midline_x = (q[27].x + q[28].x + q[29].x + q[30].x) / 4.0;

  GeometricFeatureVector f{};
  f[0] = outer_w / L;
  f[1] = outer_h / L;
  f[2] = inner_w / L;
  f[3] = inner_h / L;
  f[4] = outer_area / A;
  f[5] = inner_area / A;
  f[6] = PolygonPerimeter(outer) / L;
  f[7] = PolygonPerimeter(inner) / L;
  f[8] = outer_w > 0 ? outer_h / outer_w : 0.0;
  f[9] = inner_w > 0 ? inner_h / inner_w : 0.0;
  f[10] = Distance(q[51], q[62]) / L;
  f[11] = Distance(q[57], q[66]) / L;
  f[12] = CornerAngle(q[48], q[49], q[59]);
  f[13] = CornerAngle(q[54], q[53], q[55]);
  f[14] = (centroid.y - q[33].y) / L;
  f[15] = (centroid.x - midline_x) / L;
  f[16] = outer_area > 0 ? inner_area / outer_area : 0.0;
  f[17] = outer_h > 0 ? inner_h / outer_h : 0.0;
  return f;
}

}  // namespace vsr

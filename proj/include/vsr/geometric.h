// include/vsr/geometric.h

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

#ifndef VSR_GEOMETRIC_H_
#define VSR_GEOMETRIC_H_

#include <array>
#include <span>
#include <string>

#include "vsr/types.h"

namespace vsr {

inline constexpr int kNumGeometricFeatures = 18;
using GeometricFeatureVector = std::array<double, kNumGeometricFeatures>;

// Scale of the pose-stable face region: the jaw width between landmarks 2
// and 14 and its square.
struct NormalizationScale {
  double unit_length = 0.0;
  double unit_area = 0.0;
};

NormalizationScale ComputeNormalizationScale(const LandmarkFrame &frame);

// Index names of the 18 mouth descriptors, in output order:
//   0 outer width (48-54)        9 inner aspect ratio
//   1 outer height (51-57)      10 upper-lip thickness (51-62)
//   2 inner width (60-64)       11 lower-lip thickness (57-66)
//   3 inner height (62-66)      12 left-corner angle at 48
//   4 outer area (48..59)       13 right-corner angle at 54
//   5 inner area (60..67)       14 mouth centroid below nose base (33)
//   6 outer perimeter           15 mouth centroid offset from nose midline
//   7 inner perimeter           16 inner / outer area
//   8 outer aspect ratio        17 inner height / outer height
// Lengths are divided by unit_length and areas by unit_area; ratios and
// angles are dimensionless already. Landmarks are rotated so the mouth
// corners are horizontal before measuring.
GeometricFeatureVector GeometricFeatures(const LandmarkFrame &frame);
const std::array<std::string, kNumGeometricFeatures> &GeometricFeatureNames();

// Shoelace area (absolute value) and closed perimeter of a polygon.
double PolygonArea(std::span<const Point> polygon);
double PolygonPerimeter(std::span<const Point> polygon);

}  // namespace vsr

#endif  // VSR_GEOMETRIC_H_

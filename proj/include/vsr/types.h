// include/vsr/types.h

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

#ifndef VSR_TYPES_H_
#define VSR_TYPES_H_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace vsr {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

// Standard 68-point face annotation. Mouth points are 48..67; the outer
// contour is 48..59 and the inner contour 60..67.
inline constexpr int kNumLandmarks = 68;
inline constexpr int kMouthBegin = 48;
inline constexpr int kMouthEnd = 68;
inline constexpr int kLeftMouthCorner = 48;
inline constexpr int kRightMouthCorner = 54;

struct LandmarkFrame {
  std::array<Point, kNumLandmarks> points{};
};

// Row-major grayscale image with intensities nominally in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

  float &at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  float at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// Aligned mouth region of interest.
struct MouthFrame {
  static constexpr int kWidth = 32;
  static constexpr int kHeight = 16;
  static constexpr int kSize = kWidth * kHeight;

  std::array<float, kSize> pixels{};
  std::string utterance_id;
  int frame_index = 0;
};

}  // namespace vsr

#endif  // VSR_TYPES_H_

// src/frontend.cc

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

#include "vsr/frontend.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vsr/corpus.h"
#include "vsr/error.h"

namespace vsr {

double MouthAlignmentAngle(const LandmarkFrame &frame) {
  const Point &l = frame.points[kLeftMouthCorner];
  const Point &r = frame.points[kRightMouthCorner];
  const double dx = r.x - l.x, dy = r.y - l.y;
  if (dx == 0.0 && dy == 0.0)
    throw DegenerateGeometryError("mouth corners 48 and 54 coincide");
  double angle = std::atan2(dy, dx);
  if (angle > std::numbers::pi / 2) angle -= std::numbers::pi;
  if (angle <= -std::numbers::pi / 2) angle += std::numbers::pi;
  return angle;
}

Point MouthCentroid(const LandmarkFrame &frame) {
  Point c;
  for (int k = kMouthBegin; k < kMouthEnd; ++k) {
    c.x += frame.points[k].x;
    c.y += frame.points[k].y;
  }
  const double n = kMouthEnd - kMouthBegin;
  return {c.x / n, c.y / n};
}

LandmarkFrame RotateLandmarks(const LandmarkFrame &frame, double angle, Point center) {
  const double c = std::cos(angle), s = std::sin(angle);
  LandmarkFrame out;
  for (int k = 0; k < kNumLandmarks; ++k) {
    const double dx = frame.points[k].x - center.x, dy = frame.points[k].y - center.y;
    out.points[k] = {center.x + c * dx - s * dy, center.y + s * dx + c * dy};
  }
  return out;
}

float SampleBilinear(const GrayImage &image, double x, double y) {
  const double fx = x - 0.5, fy = y - 0.5;
  const double x0f = std::floor(fx), y0f = std::floor(fy);
  const double ax = fx - x0f, ay = fy - y0f;
  auto clampx = [&](double v) { return std::clamp(static_cast<int>(v), 0, image.width - 1); };
  auto clampy = [&](double v) { return std::clamp(static_cast<int>(v), 0, image.height - 1); };
  const int x0 = clampx(x0f), x1 = clampx(x0f + 1), y0 = clampy(y0f), y1 = clampy(y0f + 1);
  const double top = (1 - ax) * image.at(x0, y0) + ax * image.at(x1, y0);
  const double bottom = (1 - ax) * image.at(x0, y1) + ax * image.at(x1, y1);
  return static_cast<float>((1 - ay) * top + ay * bottom);
}

MouthFrame ExtractAlignedRoi(const LandmarkFrame &frame, const GrayImage &image, double margin) {
  if (image.width <= 0 || image.height <= 0) throw ShapeError("empty source image");
  LandmarkFrame clamped = frame;
  for (auto &p : clamped.points) {
    p.x = std::clamp(p.x, 0.0, static_cast<double>(image.width));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(image.height));
  }
  const double angle = MouthAlignmentAngle(clamped);
  const Point center = MouthCentroid(clamped);
  const LandmarkFrame aligned = RotateLandmarks(clamped, -angle, center);

  double x0 = aligned.points[kMouthBegin].x, x1 = x0;
  double y0 = aligned.points[kMouthBegin].y, y1 = y0;
  for (int k = kMouthBegin; k < kMouthEnd; ++k) {
    x0 = std::min(x0, aligned.points[k].x);
    x1 = std::max(x1, aligned.points[k].x);
    y0 = std::min(y0, aligned.points[k].y);
    y1 = std::max(y1, aligned.points[k].y);
  }
  const double bw = x1 - x0, bh = y1 - y0;
  if (!(bw > 0.0) || !(bh > 0.0))
    throw DegenerateGeometryError("mouth bounding box has zero area");
  x0 -= margin * bw;
  y0 -= margin * bh;
  const double cw = bw * (1 + 2 * margin), ch = bh * (1 + 2 * margin);

  // Output pixel centre -> aligned frame -> source image (rotate back by +angle).
  const double c = std::cos(angle), s = std::sin(angle);
  MouthFrame out;
  for (int i = 0; i < MouthFrame::kHeight; ++i) {
    const double ay = y0 + (i + 0.5) * ch / MouthFrame::kHeight;
    for (int j = 0; j < MouthFrame::kWidth; ++j) {
      const double ax = x0 + (j + 0.5) * cw / MouthFrame::kWidth;
      const double dx = ax - center.x, dy = ay - center.y;
      const double sx = center.x + c * dx - s * dy, sy = center.y + s * dx + c * dy;
      out.pixels[i * MouthFrame::kWidth + j] =
          std::clamp(SampleBilinear(image, sx, sy), 0.0f, 1.0f);
    }
  }
  return out;
}

void WriteMouthFrames(const std::filesystem::path &path, const std::vector<MouthFrame> &frames) {
  FrameStack fs;
  fs.width = MouthFrame::kWidth;
  fs.height = MouthFrame::kHeight;
  fs.data.reserve(frames.size() * MouthFrame::kSize);
  for (const auto &f : frames)
    for (float p : f.pixels) fs.data.push_back(QuantizeIntensity(p));
  WriteFramesFile(path, fs);
}

std::vector<MouthFrame> ReadMouthFrames(const std::filesystem::path &path) {
  FrameStack fs = ReadFramesFile(path);
  if (fs.width != MouthFrame::kWidth || fs.height != MouthFrame::kHeight)
    throw ShapeError(path.string() + ": expected 32x16 mouth frames");
  std::vector<MouthFrame> out(fs.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].frame_index = static_cast<int>(i);
    for (int k = 0; k < MouthFrame::kSize; ++k)
      out[i].pixels[k] = fs.data[i * MouthFrame::kSize + k] / 255.0f;
  }
  return out;
}

}  // namespace vsr

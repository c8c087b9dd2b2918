// include/vsr/frontend.h

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

#ifndef VSR_FRONTEND_H_
#define VSR_FRONTEND_H_

#include <filesystem>
#include <vector>

#include "vsr/types.h"

namespace vsr {

inline constexpr double kDefaultRoiMargin = 0.15;

// Angle of the left-corner (48) to right-corner (54) vector relative to the
// horizontal, folded into (-pi/2, pi/2]. Throws DegenerateGeometryError when
// the corners coincide.
double MouthAlignmentAngle(const LandmarkFrame &frame);

// Mean of the mouth points 48..67.
Point MouthCentroid(const LandmarkFrame &frame);

// Rotates every landmark by `angle` radians about `center`.
LandmarkFrame RotateLandmarks(const LandmarkFrame &frame, double angle, Point center);

// Bilinear sample at continuous pixel coordinates (pixel k covers [k, k+1),
// centre k + 0.5) with edge replication outside the image.
float SampleBilinear(const GrayImage &image, double x, double y);

// Rotates the image about the mouth centroid by minus the alignment angle,
// crops the bounding box of the aligned mouth points expanded by `margin` of
// its size on each side and resamples it bilinearly to 32x16. Landmarks are
// clamped to the image first.
MouthFrame ExtractAlignedRoi(const LandmarkFrame &frame, const GrayImage &image,
                             double margin = kDefaultRoiMargin);

// Aligned ROI sequences use the "FRM1" format with width 32, height 16.
void WriteMouthFrames(const std::filesystem::path &path, const std::vector<MouthFrame> &frames);
std::vector<MouthFrame> ReadMouthFrames(const std::filesystem::path &path);

}  // namespace vsr

#endif  // VSR_FRONTEND_H_

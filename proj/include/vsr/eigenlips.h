// include/vsr/eigenlips.h

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

#ifndef VSR_EIGENLIPS_H_
#define VSR_EIGENLIPS_H_

#include <Eigen/Dense>
#include <filesystem>
#include <span>

#include "vsr/types.h"

namespace vsr {

inline constexpr int kDefaultEigenlipCount = 32;

// Principal components of flattened 32x16 mouth images.
struct EigenlipModel {
  Eigen::VectorXd mean;        // 512
  Eigen::MatrixXd components;  // K x 512, orthonormal rows
  Eigen::VectorXd eigenvalues; // K, non-increasing

  int NumComponents() const { return static_cast<int>(components.rows()); }
};

Eigen::VectorXd Flatten(const MouthFrame &frame);

// Top-K eigenvectors of the population (1/N) covariance of the frames. Each
// component's largest-magnitude coordinate is made positive (first index on
// ties). Needs at least K + 1 frames.
EigenlipModel FitPca(std::span<const MouthFrame> frames, int num_components);

// components * (flatten(frame) - mean)
Eigen::VectorXd Project(const EigenlipModel &model, const MouthFrame &frame);
// mean + components^T * coefficients
Eigen::VectorXd Reconstruct(const EigenlipModel &model, const Eigen::VectorXd &coefficients);

// Fixes the sign of each row in place as FitPca does.
void NormalizeComponentSigns(Eigen::MatrixXd &components);

// "EIG1": u32 K, f64 mean[512], f64 eigenvalues[K], f64 components[K][512].
void SaveEigenlipModel(const std::filesystem::path &path, const EigenlipModel &model);
EigenlipModel LoadEigenlipModel(const std::filesystem::path &path);

}  // namespace vsr

#endif  // VSR_EIGENLIPS_H_

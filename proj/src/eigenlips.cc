// src/eigenlips.cc

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

#include "vsr/eigenlips.h"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "vsr/binary_io.h"
#include "vsr/error.h"

namespace vsr {

Eigen::VectorXd Flatten(const MouthFrame &frame) {
  Eigen::VectorXd v(MouthFrame::kSize);
  for (int k = 0; k < MouthFrame::kSize; ++k) v[k] = frame.pixels[k];
  return v;
}

void NormalizeComponentSigns(Eigen::MatrixXd &components) {
  for (Eigen::Index r = 0; r < components.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < components.cols(); ++c)
      if (std::abs(components(r, c)) > std::abs(components(r, best))) best = c;
    if (components(r, best) < 0) components.row(r) *= -1.0;
  }
}

EigenlipModel FitPca(std::span<const MouthFrame> frames, int num_components) {
  constexpr int kDim = MouthFrame::kSize;
  if (num_components < 1 || num_components > kDim)
    throw ConfigError("component count must be in [1, 512]");
  if (frames.size() < static_cast<size_t>(num_components) + 1)
    throw InsufficientDataError("PCA with " + std::to_string(num_components) +
                                " components needs at least " +
                                std::to_string(num_components + 1) + " frames, got " +
                                std::to_string(frames.size()));
  const Eigen::Index n = static_cast<Eigen::Index>(frames.size());
  Eigen::MatrixXd data(n, kDim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < kDim; ++k) data(i, k) = frames[i].pixels[k];

  EigenlipModel model;
  model.mean = data.colwise().mean().transpose();
  data.rowwise() -= model.mean.transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(kDim, kDim);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(data.transpose(), 1.0 / static_cast<double>(n));
  cov = cov.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  model.components.resize(num_components, kDim);
  model.eigenvalues.resize(num_components);
  for (int k = 0; k < num_components; ++k) {
    const int src = kDim - 1 - k;
    model.components.row(k) = solver.eigenvectors().col(src).transpose();
    model.eigenvalues[k] = std::max(0.0, solver.eigenvalues()[src]);
  }
  NormalizeComponentSigns(model.components);
  return model;
}

Eigen::VectorXd Project(const EigenlipModel &model, const MouthFrame &frame) {
  if (model.mean.size() != MouthFrame::kSize) throw ShapeError("eigenlip model is not fitted");
  return model.components * (Flatten(frame) - model.mean);
}

Eigen::VectorXd Reconstruct(const EigenlipModel &model, const Eigen::VectorXd &coefficients) {
  if (coefficients.size() != model.components.rows())
    throw ShapeError("coefficient count does not match the model");
  return model.mean + model.components.transpose() * coefficients;
}

void SaveEigenlipModel(const std::filesystem::path &path, const EigenlipModel &model) {
  BinaryWriter w(path);
  w.WriteMagic("EIG1");
  w.WriteU32(static_cast<uint32_t>(model.NumComponents()));
  for (Eigen::Index k = 0; k < model.mean.size(); ++k) w.WriteF64(model.mean[k]);
  for (Eigen::Index k = 0; k < model.eigenvalues.size(); ++k) w.WriteF64(model.eigenvalues[k]);
  for (Eigen::Index r = 0; r < model.components.rows(); ++r)
    for (Eigen::Index c = 0; c < model.components.cols(); ++c) w.WriteF64(model.components(r, c));
  w.Close();
}

EigenlipModel LoadEigenlipModel(const std::filesystem::path &path) {
  BinaryReader r(path);
  r.ExpectMagic("EIG1");
  const uint32_t k = r.ReadU32();
  if (k < 1 || k > MouthFrame::kSize) throw IoError("bad component count in " + path.string());
  EigenlipModel m;
  m.mean.resize(MouthFrame::kSize);
  for (auto &v : m.mean) v = r.ReadF64();
  m.eigenvalues.resize(k);
  for (auto &v : m.eigenvalues) v = r.ReadF64();
  m.components.resize(k, MouthFrame::kSize);
  for (Eigen::Index i = 0; i < m.components.rows(); ++i)
    for (Eigen::Index j = 0; j < m.components.cols(); ++j) m.components(i, j) = r.ReadF64();
  return m;
}

}  // namespace vsr

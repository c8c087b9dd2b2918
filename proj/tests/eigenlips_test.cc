// tests/eigenlips_test.cc

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

#include "doctest.h"
#include "oracles.h"
#include "test_util.h"
#include "vsr/eigenlips.h"
#include "vsr/error.h"

namespace vsr {
namespace {

// Frames with a few dominant pixel patterns plus noise, so the leading
// eigenvalues are well separated.
std::vector<MouthFrame> StructuredFrames(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Eigen::VectorXd> patterns;
  for (int k = 0; k < 12; ++k) {
    Eigen::VectorXd p(MouthFrame::kSize);
    for (auto &v : p) v = g(rng);
    patterns.push_back(p.normalized() * (3.0 / (k + 1)));
  }
  std::vector<MouthFrame> frames(n);
  for (auto &f : frames) {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(MouthFrame::kSize, 0.5);
    for (const auto &p : patterns) x += 0.05 * g(rng) * p;
    for (int k = 0; k < MouthFrame::kSize; ++k) f.pixels[k] = static_cast<float>(x[k] + 0.002 * g(rng));
  }
  return frames;
}

Eigen::MatrixXd ExplicitCovariance(const std::vector<MouthFrame> &frames) {
  const int d = MouthFrame::kSize;
  std::vector<double> mean(d, 0.0);
  for (const auto &f : frames)
    for (int i = 0; i < d; ++i) mean[i] += f.pixels[i];
  for (auto &m : mean) m /= frames.size();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto &f : frames)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) cov(i, j) += (f.pixels[i] - mean[i]) * (f.pixels[j] - mean[j]);
  return cov / static_cast<double>(frames.size());
}

TEST_CASE("PCA matches a Jacobi eigensolver on the explicit covariance") {
  const auto frames = StructuredFrames(50, 1);
  const EigenlipModel model = FitPca(frames, 10);
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  testing::JacobiEigen(ExplicitCovariance(frames), &values, &vectors);
  Eigen::MatrixXd expected = vectors.leftCols(10).transpose();
  NormalizeComponentSigns(expected);
  for (int k = 0; k < 10; ++k) {
    CHECK(model.eigenvalues[k] == doctest::Approx(values[k]).epsilon(1e-9));
    CHECK((model.components.row(k) - expected.row(k)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("components are orthonormal and eigenvalues sorted") {
  const auto frames = StructuredFrames(80, 2);
  const EigenlipModel model = FitPca(frames, 32);
  const Eigen::MatrixXd gram = model.components * model.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(32, 32)).cwiseAbs().maxCoeff() < 1e-8);
  for (int k = 1; k < 32; ++k) CHECK(model.eigenvalues[k] <= model.eigenvalues[k - 1]);
  for (int k = 0; k < 32; ++k) CHECK(model.eigenvalues[k] >= 0.0);
}

TEST_CASE("trace identity") {
  const auto frames = StructuredFrames(600, 3);
  const EigenlipModel model = FitPca(frames, 512);
  const double trace = ExplicitCovariance(frames).trace();
  CHECK(model.eigenvalues.sum() == doctest::Approx(trace).epsilon(1e-6));
}

TEST_CASE("identical frames") {
  std::mt19937_64 rng(4);
  const MouthFrame f = testing::RandomMouthFrame(rng);
  const std::vector<MouthFrame> frames(10, f);
  const EigenlipModel model = FitPca(frames, 3);
  CHECK(model.eigenvalues.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(Project(model, f).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-point set recovers the direction") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(MouthFrame::kSize);
  for (auto &x : v) x = g(rng);
  v.normalize();
  const double a = 0.2;
  MouthFrame lo, hi;
  for (int k = 0; k < MouthFrame::kSize; ++k) {
    lo.pixels[k] = static_cast<float>(0.5 - a * v[k]);
    hi.pixels[k] = static_cast<float>(0.5 + a * v[k]);
  }
  const std::vector<MouthFrame> frames = {lo, hi};
  const EigenlipModel model = FitPca(frames, 1);
  const Eigen::VectorXd diff = Flatten(hi) - Flatten(lo);
  const double var = diff.squaredNorm() / 4.0;  // (d/2)^2 on both points
  CHECK(model.eigenvalues[0] == doctest::Approx(var).epsilon(1e-9));
  CHECK(std::abs(std::abs(model.components.row(0).dot(diff.normalized())) - 1.0) < 1e-9);
}

TEST_CASE("projection and reconstruction") {
  const auto frames = StructuredFrames(600, 6);
  const EigenlipModel full = FitPca(frames, 512);
  MouthFrame mean_frame;
  for (int k = 0; k < MouthFrame::kSize; ++k) mean_frame.pixels[k] = static_cast<float>(full.mean[k]);
  CHECK(Project(full, mean_frame).cwiseAbs().maxCoeff() < 1e-6);

  const MouthFrame held = StructuredFrames(1, 99)[0];
  CHECK((Reconstruct(full, Project(full, held)) - Flatten(held)).cwiseAbs().maxCoeff() < 1e-6);

  double prev = 1e300;
  for (int k = 1; k <= 512; k *= 2) {
    EigenlipModel m = full;
    m.components = full.components.topRows(k);
    m.eigenvalues = full.eigenvalues.head(k);
    const double err = (Reconstruct(m, Project(m, held)) - Flatten(held)).squaredNorm();
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("projection is linear on centred inputs") {
  const auto frames = StructuredFrames(60, 7);
  const EigenlipModel model = FitPca(frames, 16);
  const Eigen::VectorXd c1 = Flatten(frames[3]) - model.mean, c2 = Flatten(frames[9]) - model.mean;
  const double a = 0.3, b = -1.7;
  const Eigen::VectorXd lhs = model.components * (a * c1 + b * c2);
  const Eigen::VectorXd rhs = a * (model.components * c1) + b * (model.components * c2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("errors and file format") {
  const auto frames = StructuredFrames(5, 8);
  CHECK_THROWS_AS(FitPca(frames, 5), InsufficientDataError);
  CHECK_THROWS_AS(FitPca(frames, 0), ConfigError);
  const EigenlipModel model = FitPca(frames, 4);
  testing::TempDir dir;
  SaveEigenlipModel(dir / "m.eig", model);
  CHECK(std::filesystem::file_size(dir / "m.eig") == 4 + 4 + 8 * (512 + 4 + 4 * 512));
  const EigenlipModel back = LoadEigenlipModel(dir / "m.eig");
  CHECK(back.components == model.components);
  CHECK(back.mean == model.mean);
  CHECK(back.eigenvalues == model.eigenvalues);
}

TEST_CASE("sign convention") {
  Eigen::MatrixXd m(2, 3);
  m << 0.1, -0.9, 0.2, 0.5, 0.5, -0.5;
  NormalizeComponentSigns(m);
  CHECK(m(0, 1) == 0.9);
  CHECK(m(1, 0) == 0.5);  // first of the tied entries decides
}

}  // namespace
}  // namespace vsr

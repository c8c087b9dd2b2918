// include/vsr/autoencoder.h

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

#ifndef VSR_AUTOENCODER_H_
#define VSR_AUTOENCODER_H_

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vsr/types.h"

namespace vsr {

// Encoder: three 3x3 stride-2 conv + ReLU stages (16x32x1 -> 2x4xC3), then a
// dense map to the bottleneck. Decoder: dense + ReLU back to 2x4xC3, then
// three (nearest x2 upsample, 3x3 conv) stages with ReLU, the last with a
// logistic output.
struct AutoencoderArch {
  std::array<int, 3> channels{8, 16, 32};
  int bottleneck = 32;
};

struct AutoencoderOptions {
  AutoencoderArch arch;
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_losses;  // mean squared reconstruction error per epoch
  int epochs = 0;
};

namespace detail {
struct Layer;
}

class ConvAutoencoder {
 public:
  explicit ConvAutoencoder(const AutoencoderArch &arch = {});
  ~ConvAutoencoder();
  ConvAutoencoder(const ConvAutoencoder &other);
  ConvAutoencoder &operator=(const ConvAutoencoder &other);
  ConvAutoencoder(ConvAutoencoder &&) noexcept;
  ConvAutoencoder &operator=(ConvAutoencoder &&) noexcept;

  const AutoencoderArch &arch() const { return arch_; }
  int BottleneckDim() const { return arch_.bottleneck; }
  uint64_t seed() const { return seed_; }

  // He-normal weights, zero biases.
  void InitializeWeights(uint64_t seed);

  // Batches are 512 x B matrices, one flattened 32x16 image per column.
  Eigen::MatrixXd Encode(const Eigen::MatrixXd &images) const;
  Eigen::MatrixXd Decode(const Eigen::MatrixXd &codes) const;
  Eigen::MatrixXd Reconstruct(const Eigen::MatrixXd &images) const;

  // Mean over batch and pixels of the squared reconstruction error.
  double Loss(const Eigen::MatrixXd &images) const;
  // Same loss; overwrites the parameter gradients.
  double LossAndGradient(const Eigen::MatrixXd &images);

  struct ParamView {
    std::string name;
    std::span<double> value;
    std::span<double> grad;
  };
  // Every trainable tensor in declaration order.
  std::vector<ParamView> Parameters();
  size_t NumParameters() const;

  // Rounds every weight to single precision (the on-disk precision).
  void RoundToFloat();

  // "CAE1": u32 stage count, u32 channels[stages], u32 bottleneck, u64 seed,
  // then f32 weights in declaration order (per layer: weight row-major, bias).
  void Save(const std::filesystem::path &path) const;
  static ConvAutoencoder Load(const std::filesystem::path &path);

 private:
  void Build();
  Eigen::MatrixXd Run(size_t begin, size_t end, const Eigen::MatrixXd &input,
                      std::vector<Eigen::MatrixXd> *trace) const;

  AutoencoderArch arch_;
  uint64_t seed_ = 0;
  std::vector<std::unique_ptr<detail::Layer>> layers_;
  size_t encoder_layers_ = 0;
};

Eigen::MatrixXd FramesToBatch(std::span<const MouthFrame> frames);

// Mini-batch SGD with momentum on the reconstruction loss. Batch order is a
// seeded shuffle per epoch; everything is reproducible for a fixed seed.
// Throws TrainingDivergedError when an epoch loss is not finite.
std::pair<ConvAutoencoder, TrainReport> TrainAutoencoder(std::span<const MouthFrame> frames,
                                                         const AutoencoderOptions &options);

Eigen::VectorXd Encode(const ConvAutoencoder &model, const MouthFrame &frame);

}  // namespace vsr

#endif  // VSR_AUTOENCODER_H_

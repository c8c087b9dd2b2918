// include/vsr/features.h

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

#ifndef VSR_FEATURES_H_
#define VSR_FEATURES_H_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "vsr/autoencoder.h"
#include "vsr/eigenlips.h"
#include "vsr/types.h"

namespace vsr {

enum class Normalization { kNone, kSpeaker, kUtterance };

std::string NormalizationName(Normalization n);
// Throws ConfigError for anything but none / speaker / utterance.
Normalization ParseNormalization(const std::string &name);

struct FeatureSequence {
  Eigen::MatrixXd frames;  // T x D
  std::string utterance_id;
  std::string speaker_id;
  std::string stream_tag;  // geo, eig, dnn or a "+"-joined combination
  Normalization normalization = Normalization::kNone;
  int delta_context = 0;   // 0 = raw

  int NumFrames() const { return static_cast<int>(frames.rows()); }
  int Dim() const { return static_cast<int>(frames.cols()); }
};

// Per-frame stream extraction.
FeatureSequence GeometricStream(const std::vector<LandmarkFrame> &landmarks,
                                const std::string &utterance_id, const std::string &speaker_id);
FeatureSequence EigenlipStream(const EigenlipModel &model, const std::vector<MouthFrame> &frames,
                               const std::string &utterance_id, const std::string &speaker_id);
FeatureSequence DeepStream(const ConvAutoencoder &model, const std::vector<MouthFrame> &frames,
                           const std::string &utterance_id, const std::string &speaker_id);

// Regression deltas over +-N frames with the first/last frame replicated:
//   d_t = sum_n n (c_{t+n} - c_{t-n}) / (2 sum_n n^2)
Eigen::MatrixXd RegressionDeltas(const Eigen::MatrixXd &x, int context);

// Appends deltas and delta-deltas: [static | delta | delta-delta].
// Needs delta_context == 0 and at least 2 frames.
FeatureSequence AddDeltas(const FeatureSequence &seq, int context);

// Per-dimension z-score within each speaker or each utterance (population
// standard deviation floored at 1e-8). Sequences that already carry deltas
// are rejected with PipelineOrderError.
std::vector<FeatureSequence> ZscoreNormalize(const std::vector<FeatureSequence> &seqs,
                                             Normalization mode);

// Frame-wise concatenation in the given order.
FeatureSequence CombineStreams(const std::vector<FeatureSequence> &seqs);

// "VFA1": u32 T, u32 D, strings utterance_id, speaker_id, stream_tag,
// normalization, u8 delta context, then f32 frames row-major.
void WriteFeatureArchive(const std::filesystem::path &path, const FeatureSequence &seq);
FeatureSequence ReadFeatureArchive(const std::filesystem::path &path);

}  // namespace vsr

#endif  // VSR_FEATURES_H_

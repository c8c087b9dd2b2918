// src/features.cc

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

#include "vsr/features.h"

#include <cmath>
#include <map>

#include "vsr/binary_io.h"
#include "vsr/error.h"
#include "vsr/geometric.h"

namespace vsr {

std::string NormalizationName(Normalization n) {
  switch (n) {
    case Normalization::kNone: return "none";
    case Normalization::kSpeaker: return "speaker";
    case Normalization::kUtterance: return "utterance";
  }
  return "none";
}

Normalization ParseNormalization(const std::string &name) {
  if (name == "none") return Normalization::kNone;
  if (name == "speaker") return Normalization::kSpeaker;
  if (name == "utterance") return Normalization::kUtterance;
  throw ConfigError("unknown normalization mode '" + name + "'");
}

namespace {

void CheckFinite(const FeatureSequence &seq) {
  if (!seq.frames.allFinite())
    throw ShapeError("non-finite feature values in utterance " + seq.utterance_id + " (" +
                     seq.stream_tag + ")");
}

FeatureSequence Wrap(Eigen::MatrixXd frames, const std::string &utt, const std::string &spk,
                     const char *tag) {
  FeatureSequence seq;
  seq.frames = std::move(frames);
  seq.utterance_id = utt;
  seq.speaker_id = spk;
  seq.stream_tag = tag;
  CheckFinite(seq);
  return seq;
}

}  // namespace

FeatureSequence GeometricStream(const std::vector<LandmarkFrame> &landmarks,
                                const std::string &utterance_id, const std::string &speaker_id) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(landmarks.size()), kNumGeometricFeatures);
  for (size_t t = 0; t < landmarks.size(); ++t) {
    GeometricFeatureVector f;
    try {
      f = GeometricFeatures(landmarks[t]);
    } catch (const DegenerateGeometryError &e) {
      throw DegenerateGeometryError(utterance_id + " frame " + std::to_string(t) + ": " +
                                    e.what());
    }
    for (int k = 0; k < kNumGeometricFeatures; ++k) m(static_cast<Eigen::Index>(t), k) = f[k];
  }
  return Wrap(std::move(m), utterance_id, speaker_id, "geo");
}

FeatureSequence EigenlipStream(const EigenlipModel &model, const std::vector<MouthFrame> &frames,
                               const std::string &utterance_id, const std::string &speaker_id) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(frames.size()), model.NumComponents());
  for (size_t t = 0; t < frames.size(); ++t)
    m.row(static_cast<Eigen::Index>(t)) = Project(model, frames[t]).transpose();
  return Wrap(std::move(m), utterance_id, speaker_id, "eig");
}

FeatureSequence DeepStream(const ConvAutoencoder &model, const std::vector<MouthFrame> &frames,
                           const std::string &utterance_id, const std::string &speaker_id) {
  Eigen::MatrixXd codes = model.Encode(FramesToBatch(frames));
  return Wrap(codes.transpose(), utterance_id, speaker_id, "dnn");
}

Eigen::MatrixXd RegressionDeltas(const Eigen::MatrixXd &x, int context) {
  const Eigen::Index T = x.rows();
  double denom = 0.0;
  for (int n = 1; n <= context; ++n) denom += n * n;
  denom *= 2.0;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(T, x.cols());
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int n = 1; n <= context; ++n) {
      const Eigen::Index fwd = std::min<Eigen::Index>(T - 1, t + n);
      const Eigen::Index bwd = std::max<Eigen::Index>(0, t - n);
      d.row(t) += n * (x.row(fwd) - x.row(bwd));
    }
    d.row(t) /= denom;
  }
  return d;
}

FeatureSequence AddDeltas(const FeatureSequence &seq, int context) {
  if (context < 1 || context > 3) throw ConfigError("delta context must be 1, 2 or 3");
  if (seq.delta_context != 0)
    throw PipelineOrderError(seq.utterance_id + ": deltas already applied");
  if (seq.NumFrames() < 2)
    throw SequenceTooShortError(seq.utterance_id + ": " + std::to_string(seq.NumFrames()) +
                                " frame(s), deltas need at least 2");
  const Eigen::MatrixXd d1 = RegressionDeltas(seq.frames, context);
  const Eigen::MatrixXd d2 = RegressionDeltas(d1, context);
  FeatureSequence out = seq;
  const Eigen::Index D = seq.frames.cols();
  out.frames.resize(seq.frames.rows(), 3 * D);
  out.frames << seq.frames, d1, d2;
  out.delta_context = context;
  return out;
}

std::vector<FeatureSequence> ZscoreNormalize(const std::vector<FeatureSequence> &seqs,
                                             Normalization mode) {
  if (mode == Normalization::kNone) return seqs;
  constexpr double kEpsilon = 1e-8;
  struct Stats {
    Eigen::VectorXd sum, sum_sq;
    double count = 0.0;
  };
  std::map<std::string, Stats> groups;
  auto key = [&](const FeatureSequence &s) {
    return mode == Normalization::kSpeaker ? s.speaker_id : s.utterance_id;
  };
  for (const auto &s : seqs) {
    if (s.delta_context != 0)
      throw PipelineOrderError(s.utterance_id + ": z-score normalization must precede deltas");
    Stats &g = groups[key(s)];
    if (g.count == 0.0) {
      g.sum = Eigen::VectorXd::Zero(s.Dim());
      g.sum_sq = Eigen::VectorXd::Zero(s.Dim());
    } else if (g.sum.size() != s.Dim()) {
      throw IncompatibleStreamsError("dimension mismatch within normalization group " + key(s));
    }
    g.sum += s.frames.colwise().sum().transpose();
    g.count += s.NumFrames();
  }
  // Second pass around the mean for accuracy.
  std::map<std::string, Eigen::VectorXd> means;
  for (auto &[k, g] : groups) means[k] = g.sum / g.count;
  for (const auto &s : seqs) {
    Stats &g = groups[key(s)];
    const Eigen::MatrixXd c = s.frames.rowwise() - means[key(s)].transpose();
    g.sum_sq += c.array().square().colwise().sum().matrix().transpose();
  }
  std::vector<FeatureSequence> out = seqs;
  for (auto &s : out) {
    const Stats &g = groups[key(s)];
    const Eigen::VectorXd sd = (g.sum_sq / g.count).cwiseSqrt().cwiseMax(kEpsilon);
    s.frames = (s.frames.rowwise() - means[key(s)].transpose()).array().rowwise() /
               sd.transpose().array();
    s.normalization = mode;
  }
  return out;
}

FeatureSequence CombineStreams(const std::vector<FeatureSequence> &seqs) {
  if (seqs.empty()) throw IncompatibleStreamsError("no streams to combine");
  const FeatureSequence &first = seqs.front();
  Eigen::Index total = 0;
  for (const auto &s : seqs) {
    if (s.utterance_id != first.utterance_id || s.NumFrames() != first.NumFrames() ||
        s.normalization != first.normalization || s.delta_context != first.delta_context)
      throw IncompatibleStreamsError("cannot combine " + first.stream_tag + " of " +
                                     first.utterance_id + " (T=" +
                                     std::to_string(first.NumFrames()) + ") with " +
                                     s.stream_tag + " of " + s.utterance_id + " (T=" +
                                     std::to_string(s.NumFrames()) + ")");
    total += s.Dim();
  }
  FeatureSequence out = first;
  out.frames.resize(first.frames.rows(), total);
  Eigen::Index col = 0;
  for (size_t i = 0; i < seqs.size(); ++i) {
    out.frames.middleCols(col, seqs[i].Dim()) = seqs[i].frames;
    col += seqs[i].Dim();
    if (i > 0) out.stream_tag += "+" + seqs[i].stream_tag;
  }
  return out;
}

void WriteFeatureArchive(const std::filesystem::path &path, const FeatureSequence &seq) {
  BinaryWriter w(path);
  w.WriteMagic("VFA1");
  w.WriteU32(static_cast<uint32_t>(seq.NumFrames()));
  w.WriteU32(static_cast<uint32_t>(seq.Dim()));
  w.WriteString(seq.utterance_id);
  w.WriteString(seq.speaker_id);
  w.WriteString(seq.stream_tag);
  w.WriteString(NormalizationName(seq.normalization));
  w.WriteU8(static_cast<uint8_t>(seq.delta_context));
  for (Eigen::Index t = 0; t < seq.frames.rows(); ++t)
    for (Eigen::Index d = 0; d < seq.frames.cols(); ++d)
      w.WriteF32(static_cast<float>(seq.frames(t, d)));
  w.Close();
}

FeatureSequence ReadFeatureArchive(const std::filesystem::path &path) {
  BinaryReader r(path);
  r.ExpectMagic("VFA1");
  const uint32_t T = r.ReadU32();
  const uint32_t D = r.ReadU32();
  FeatureSequence seq;
  seq.utterance_id = r.ReadString();
  seq.speaker_id = r.ReadString();
  seq.stream_tag = r.ReadString();
  seq.normalization = ParseNormalization(r.ReadString());
  seq.delta_context = r.ReadU8();
  seq.frames.resize(T, D);
  for (uint32_t t = 0; t < T; ++t)
    for (uint32_t d = 0; d < D; ++d) seq.frames(t, d) = r.ReadF32();
  return seq;
}

}  // namespace vsr

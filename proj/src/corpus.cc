// src/corpus.cc

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

#include "vsr/corpus.h"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vsr/binary_io.h"
#include "vsr/error.h"
#include "vsr/util.h"

namespace vsr {

namespace {

double ParseDouble(const std::string &s, const std::string &what, int lineno) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw IngestError("manifest line " + std::to_string(lineno) + ": bad " + what + " '" +
                      s + "'");
  }
}

}  // namespace

std::vector<UtteranceRecord> LoadManifest(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<UtteranceRecord> records;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    auto fields = Split(line, '\t');
    if (fields.size() < 7)
      throw IngestError("manifest line " + std::to_string(lineno) + ": expected 7 fields, got " +
                        std::to_string(fields.size()));
    UtteranceRecord r;
    r.utterance_id = Trim(fields[0]);
    r.speaker_id = Trim(fields[1]);
    if (r.utterance_id.empty())
      throw IngestError("manifest line " + std::to_string(lineno) + ": missing utterance_id");
    if (!seen.insert(r.utterance_id).second)
      throw IngestError("duplicate utterance_id '" + r.utterance_id + "'");
    if (r.speaker_id.empty())
      throw IngestError("utterance '" + r.utterance_id + "' has no speaker_id");
    r.frame_rate = ParseDouble(Trim(fields[2]), "frame_rate", lineno);
    r.duration = ParseDouble(Trim(fields[3]), "duration", lineno);
    if (!(r.frame_rate > 0.0))
      throw IngestError("utterance '" + r.utterance_id + "' has non-positive frame rate");
    r.landmark_path = Trim(fields[4]);
    r.frames_path = Trim(fields[5]);
    if (r.landmark_path.is_relative()) r.landmark_path = base / r.landmark_path;
    if (r.frames_path.is_relative()) r.frames_path = base / r.frames_path;
    std::vector<std::string> rest(fields.begin() + 6, fields.end());
    r.transcript = SplitWhitespace(Join(rest, " "));
    if (r.transcript.empty())
      throw IngestError("utterance '" + r.utterance_id + "' has an empty transcript");

    uint32_t n_lmk = ReadLandmarkFrameCount(r.landmark_path);
    uint32_t n_frm = ReadFramesFrameCount(r.frames_path);
    if (n_lmk != n_frm)
      throw IntegrityError("utterance '" + r.utterance_id + "': landmark file has " +
                           std::to_string(n_lmk) + " frames but frames file has " +
                           std::to_string(n_frm));
    const double period = 1.0 / r.frame_rate;
    const double recomputed = n_lmk * period;
    if (std::abs(recomputed - r.duration) > period + 1e-9)
      LogWarning("utterance '" + r.utterance_id + "': manifest duration " +
                 std::to_string(r.duration) + " s differs from " + std::to_string(n_lmk) +
                 " frames at " + std::to_string(r.frame_rate) + " fps");
    records.push_back(std::move(r));
  }
  return records;
}

void WriteManifest(const std::filesystem::path &path,
                   const std::vector<UtteranceRecord> &records,
                   const std::filesystem::path &base_dir) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  auto rel = [&](const std::filesystem::path &p) {
    auto r = p.lexically_relative(base_dir);
    return r.empty() ? p.generic_string() : r.generic_string();
  };
  for (const auto &r : records) {
    out << r.utterance_id << '\t' << r.speaker_id << '\t' << FormatDouble(r.frame_rate) << '\t'
        << FormatDouble(r.duration)
        << '\t' << rel(r.landmark_path) << '\t' << rel(r.frames_path) << '\t'
        << Join(r.transcript, " ") << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

CorpusSplit SplitBySpeakerDuration(const std::vector<UtteranceRecord> &records,
                                   double min_seconds) {
  if (!(min_seconds > 0.0)) throw ConfigError("min_seconds must be positive");
  std::map<std::string, double> totals;
  for (const auto &r : records) totals[r.speaker_id] += r.duration;
  CorpusSplit split;
  split.min_seconds = min_seconds;
  for (const auto &r : records) {
    if (totals[r.speaker_id] >= min_seconds)
      split.train.push_back(r);
    else
      split.test.push_back(r);
  }
  if (split.train.empty())
    throw DegenerateSplitError("every speaker is below " + std::to_string(min_seconds) +
                               " s; the training partition would be empty");
  return split;
}

// ---------------------------------------------------------------------------
// Landmark and frame files

std::vector<LandmarkFrame> ReadLandmarkFile(const std::filesystem::path &path) {
  BinaryReader r(path);
  r.ExpectMagic("LMK1");
  uint32_t n = r.ReadU32();
  uint32_t points = r.ReadU32();
  if (points != kNumLandmarks)
    throw IoError(path.string() + ": expected 68 points per frame, got " + std::to_string(points));
  std::vector<LandmarkFrame> frames(n);
  for (auto &f : frames)
    for (auto &p : f.points) {
      p.x = r.ReadF32();
      p.y = r.ReadF32();
    }
  return frames;
}

void WriteLandmarkFile(const std::filesystem::path &path,
                       const std::vector<LandmarkFrame> &frames) {
  BinaryWriter w(path);
  w.WriteMagic("LMK1");
  w.WriteU32(static_cast<uint32_t>(frames.size()));
  w.WriteU32(kNumLandmarks);
  for (const auto &f : frames)
    for (const auto &p : f.points) {
      w.WriteF32(static_cast<float>(p.x));
      w.WriteF32(static_cast<float>(p.y));
    }
  w.Close();
}

uint32_t ReadLandmarkFrameCount(const std::filesystem::path &path) {
  BinaryReader r(path);
  r.ExpectMagic("LMK1");
  return r.ReadU32();
}

GrayImage FrameStack::Frame(size_t i) const {
  GrayImage img(width, height);
  const size_t n = static_cast<size_t>(width) * height;
  const uint8_t *src = data.data() + i * n;
  for (size_t k = 0; k < n; ++k) img.pixels[k] = src[k] / 255.0f;
  return img;
}

FrameStack ReadFramesFile(const std::filesystem::path &path) {
  BinaryReader r(path);
  r.ExpectMagic("FRM1");
  uint32_t n = r.ReadU32();
  FrameStack fs;
  fs.width = static_cast<int>(r.ReadU32());
  fs.height = static_cast<int>(r.ReadU32());
  fs.data.resize(static_cast<size_t>(n) * fs.width * fs.height);
  r.ReadBytes(fs.data);
  return fs;
}

void WriteFramesFile(const std::filesystem::path &path, const FrameStack &frames) {
  BinaryWriter w(path);
  w.WriteMagic("FRM1");
  w.WriteU32(static_cast<uint32_t>(frames.size()));
  w.WriteU32(static_cast<uint32_t>(frames.width));
  w.WriteU32(static_cast<uint32_t>(frames.height));
  w.WriteBytes(frames.data);
  w.Close();
}

uint32_t ReadFramesFrameCount(const std::filesystem::path &path) {
  BinaryReader r(path);
  r.ExpectMagic("FRM1");
  return r.ReadU32();
}

uint8_t QuantizeIntensity(float p) {
  float c = std::min(1.0f, std::max(0.0f, p));
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

}  // namespace vsr

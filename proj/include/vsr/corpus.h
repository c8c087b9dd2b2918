// include/vsr/corpus.h

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

#ifndef VSR_CORPUS_H_
#define VSR_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vsr/lingware.h"
#include "vsr/types.h"

namespace vsr {

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::vector<std::string> transcript;
  double frame_rate = 30.0;
  double duration = 0.0;  // seconds; authoritative as written in the manifest
  std::filesystem::path landmark_path;
  std::filesystem::path frames_path;
};

struct CorpusSplit {
  std::vector<UtteranceRecord> train;
  std::vector<UtteranceRecord> test;
  double min_seconds = 0.0;
};

// Parses a tab-separated manifest:
//   utt_id \t spk_id \t frame_rate \t duration \t landmarks \t frames \t words...
// Relative file references resolve against the manifest's directory. Every
// record is checked against its landmark and frame file headers.
std::vector<UtteranceRecord> LoadManifest(const std::filesystem::path &path);

// Writes records with file references relative to `base_dir` when possible.
void WriteManifest(const std::filesystem::path &path,
                   const std::vector<UtteranceRecord> &records,
                   const std::filesystem::path &base_dir);

// Speakers whose total duration is below min_seconds go to test, the rest to
// train. Input order is preserved within each side.
CorpusSplit SplitBySpeakerDuration(const std::vector<UtteranceRecord> &records,
                                   double min_seconds);

// "LMK1" landmark files: u32 frame count, u32 point count (68), then
// frame-major f32 (x, y) pairs.
std::vector<LandmarkFrame> ReadLandmarkFile(const std::filesystem::path &path);
void WriteLandmarkFile(const std::filesystem::path &path,
                       const std::vector<LandmarkFrame> &frames);
uint32_t ReadLandmarkFrameCount(const std::filesystem::path &path);

// "FRM1" frame files: u32 frame count, u32 width, u32 height, then u8 pixels.
struct FrameStack {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  size_t size() const {
    return width * height == 0 ? 0 : data.size() / (static_cast<size_t>(width) * height);
  }
  // Frame i as intensities in [0, 1].
  GrayImage Frame(size_t i) const;
};

FrameStack ReadFramesFile(const std::filesystem::path &path);
void WriteFramesFile(const std::filesystem::path &path, const FrameStack &frames);
uint32_t ReadFramesFrameCount(const std::filesystem::path &path);

// u8 quantization used by every frame writer: round(p * 255), p clamped to [0, 1].
uint8_t QuantizeIntensity(float p);

struct SynthSpec {
  std::vector<std::string> phoneme_inventory;  // defaults to the 23 Spanish phonemes
  Lexicon lexicon;
  int n_speakers = 5;
  int n_utterances = 240;
  // Optional explicit per-speaker utterance counts; must sum to n_utterances.
  std::vector<int> speaker_utterance_counts;
  double frames_per_phoneme_mean = 3.0;
  double frames_per_phoneme_stddev = 1.0;
  double silence_frames_mean = 4.0;  // leading and trailing closed-mouth rest
  int min_words = 3;
  int max_words = 6;
  double noise_level = 0.03;
  double frame_rate = 30.0;
  uint64_t seed = 7;
  int image_width = 80;
  int image_height = 64;

  // Throws ConfigError when the spec is unusable.
  void Validate() const;
};

// Twenty common Spanish words with rule-based pronunciations.
Lexicon DefaultSynthLexicon();
SynthSpec DefaultSynthSpec();

// Renders a synthetic talking-mouth corpus into out_dir: data/<utt>.lmk,
// data/<utt>.frm, lexicon.txt and manifest.tsv. Deterministic in the spec.
std::vector<UtteranceRecord> SynthesizeCorpus(const SynthSpec &spec,
                                              const std::filesystem::path &out_dir);

// Mouth shape controls used by the synthesizer, exposed for tests.
struct MouthShape {
  double width = 0.42;    // fraction of jaw width
  double height = 0.0;    // inner opening, fraction of jaw width
  double curl = 0.0;      // corner lift, fraction of jaw width
  double teeth = 0.5;     // teeth band intensity
};

// Base articulatory target of phoneme index i (0-based in the inventory);
// i = -1 is the silence / rest posture.
MouthShape PhonemeTarget(int phoneme_index);

}  // namespace vsr

#endif  // VSR_CORPUS_H_

// include/vsr/experiment.h

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

#ifndef VSR_EXPERIMENT_H_
#define VSR_EXPERIMENT_H_

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vsr/autoencoder.h"
#include "vsr/corpus.h"
#include "vsr/decoder.h"
#include "vsr/eval.h"
#include "vsr/features.h"
#include "vsr/lingware.h"
#include "vsr/optical_model.h"

namespace vsr {

// Flat "key = value" settings. '#' starts a comment; "include <file>" pulls
// in another file (relative to the including one); later lines win.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap ReadConfigFile(const std::filesystem::path &path);
// "key=value" override.
void ApplyOverride(ConfigMap &config, const std::string &assignment);

struct ExperimentConfig {
  std::filesystem::path manifest;
  std::filesystem::path lexicon;  // empty: lexicon.txt beside the manifest
  double min_seconds = 60.0;
  double roi_margin = 0.15;
  int pca_components = 32;
  AutoencoderOptions autoencoder;
  int ae_max_frames = 0;  // 0 = every training frame
  std::vector<std::string> rows = {"geo",     "eig",     "dnn",        "geo+eig",
                                   "geo+dnn", "eig+dnn", "geo+eig+dnn"};
  std::vector<int> deltas = {0, 1, 2, 3};
  std::vector<Normalization> normalizations = {Normalization::kSpeaker,
                                               Normalization::kUtterance};
  TopologyKind topology = TopologyKind::kSkip2;
  std::vector<int> mixture_schedule = TrainOptions{}.mixture_schedule;
  bool use_silence = true;
  double variance_floor_factor = 1e-3;
  DecodeConfig decode;
  uint64_t eval_seed = 1;
  int bootstrap_samples = kDefaultBootstrapSamples;

  // Unknown keys and out-of-domain values throw ConfigError. Relative paths
  // resolve against base_dir.
  static ExperimentConfig FromMap(const ConfigMap &map,
                                  const std::filesystem::path &base_dir = {});
  // Canonical key=value text of every setting except file locations.
  std::string Canonical() const;
};

// Documented keys and defaults, one per line.
std::string ConfigHelp();

struct GridCell {
  std::string row;  // "+"-joined streams
  int delta = 0;
  Normalization normalization = Normalization::kSpeaker;
  TopologyKind topology = TopologyKind::kSkip2;

  std::string Name() const;
};

struct CellResult {
  GridCell cell;
  WerReport report;
  std::vector<double> train_log_likelihoods;
  bool trained = false;  // false when the model came from the cache
  bool decoded = false;
};

// Stage directories live under <out>/cache/<stage>-<key>; a stage is reused
// when its DONE marker exists. STAMP.json records the tool version and the
// hash of the settings behind the key.
class StageCache {
 public:
  explicit StageCache(std::filesystem::path out_dir) : root_(std::move(out_dir) / "cache") {}
  // Runs build(tmp_dir) unless the stage is complete, then returns its directory.
  std::filesystem::path Ensure(const std::string &stage, const std::string &key_material,
                               const std::function<void(const std::filesystem::path &)> &build,
                               bool *built = nullptr);
  std::filesystem::path Dir(const std::string &stage, const std::string &key_material) const;

 private:
  std::filesystem::path root_;
};

// Everything upstream of the HMM: corpus, split, closed LM, ROI frames and
// the raw per-stream features.
class Experiment {
 public:
  Experiment(ExperimentConfig config, std::filesystem::path out_dir, unsigned jobs = 1);

  void Prepare();
  CellResult RunCell(const GridCell &cell);
  // Every (row, delta, normalization) cell of the configured grid.
  std::vector<CellResult> RunGrid();
  void WriteTables(const std::vector<CellResult> &results) const;

  const ExperimentConfig &config() const { return config_; }
  const CorpusSplit &split() const { return split_; }
  const Lexicon &lexicon() const { return lexicon_; }
  const BigramLm &lm() const { return lm_; }
  std::string ConfigHash() const;
  // Feature sequences of a cell, train then test order of the split.
  std::vector<FeatureSequence> CellFeatures(const GridCell &cell) const;

 private:
  void BuildStreams();
  std::string CorpusHash() const;

  ExperimentConfig config_;
  std::filesystem::path out_dir_;
  unsigned jobs_;
  StageCache cache_;
  std::vector<UtteranceRecord> records_;
  CorpusSplit split_;
  Lexicon lexicon_;
  BigramLm lm_;
  std::string corpus_hash_;
  std::string roi_key_;
  std::map<std::string, std::string> stream_keys_;
  std::map<std::string, std::vector<FeatureSequence>> streams_;  // split order
  bool prepared_ = false;
};

// One line per feature row, one column per normalization and delta pair.
std::string FormatMarkdownTable(const std::vector<CellResult> &results);
std::string FormatTsv(const std::vector<CellResult> &results);

std::string DeltaName(int context);  // raw, dd1, dd2, dd3

}  // namespace vsr

#endif  // VSR_EXPERIMENT_H_

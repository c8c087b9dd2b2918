// include/vsr/decoder.h

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

#ifndef VSR_DECODER_H_
#define VSR_DECODER_H_

#include <Eigen/Dense>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "vsr/lingware.h"
#include "vsr/optical_model.h"

namespace vsr {

struct DecodeConfig {
  double lm_scale = 10.0;
  double word_insertion_penalty = 0.0;  // log domain, added per word
  double beam = 200.0;                  // infinity = exact search

  void Validate() const;
};

struct DecodeResult {
  std::vector<std::string> words;
  double score = kLogZero;
  // [begin, end) frame range of each word; the ranges partition [0, T] and
  // boundary silence is attached to the neighbouring word.
  std::vector<std::pair<int, int>> boundaries;
};

// Time-synchronous Viterbi search over word-pronunciation HMM chains with the
// bigram applied exactly at every word entry. The search space is built once
// and reused for every utterance.
class Decoder {
 public:
  // The vocabulary is the LM vocabulary; every word needs a pronunciation.
  Decoder(const OpticalModel &model, const Lexicon &lexicon, const BigramLm &lm,
          const DecodeConfig &config = {});

  DecodeResult Decode(const Eigen::MatrixXd &features) const;
  // Same search on precomputed T x NumEmittingStates() log-likelihoods.
  DecodeResult DecodeLogLikelihoods(const Eigen::MatrixXd &loglikes) const;

  const DecodeConfig &config() const { return config_; }

 private:
  struct Arc {
    int from;
    int to;
    double log_prob;
  };
  struct Unit {  // one pronunciation of a word, or a boundary silence
    int word = -1;
    int first_state = 0;
    int num_states = 0;
    std::vector<std::pair<int, double>> exits;  // (state, log prob)
  };

  int AddUnit(const std::vector<int> &phones, int word);

  const OpticalModel &model_;
  const BigramLm &lm_;
  DecodeConfig config_;
  std::vector<int> state_global_;
  std::vector<Arc> arcs_;  // sorted by source state
  std::vector<Unit> units_;
  int lead_sil_ = -1;
  int tail_sil_ = -1;
  int first_word_unit_ = 0;
};

// "utt_id<TAB>words" lines.
void WriteHypotheses(const std::filesystem::path &path,
                     const std::vector<std::pair<std::string, std::vector<std::string>>> &hyps);
std::vector<std::pair<std::string, std::vector<std::string>>> ReadTranscriptFile(
    const std::filesystem::path &path);

}  // namespace vsr

#endif  // VSR_DECODER_H_

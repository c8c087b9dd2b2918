// include/vsr/eval.h

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

#ifndef VSR_EVAL_H_
#define VSR_EVAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace vsr {

struct EditCounts {
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;

  int Errors() const { return substitutions + insertions + deletions; }
};

// Unit-cost minimal edit alignment of hyp against ref. Among minimal
// alignments the backtrace prefers substitution (or match), then insertion,
// then deletion. Throws UndefinedWerError for an empty reference.
EditCounts AlignWer(const std::vector<std::string> &ref, const std::vector<std::string> &hyp);

struct UtteranceScore {
  std::string utterance_id;
  EditCounts counts;
  int ref_words = 0;
};

struct WerReport {
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  int ref_words = 0;
  double wer = 0.0;      // percent
  double ci_low = 0.0;   // percent
  double ci_high = 0.0;  // percent
  int bootstrap_samples = 0;
  uint64_t seed = 0;

  // "WER xx.x ± y.y" with y the half-width of the interval.
  std::string FormatLine() const;
  std::string ToJson() const;
};

inline constexpr int kDefaultBootstrapSamples = 10000;

// Resamples utterances with replacement B times (resample b draws from
// mt19937_64(seed + b)), pools errors and reference words, and takes the
// nearest-rank 2.5th and 97.5th percentiles of the resampled WERs.
WerReport BootstrapCi(const std::vector<UtteranceScore> &scores,
                      int samples = kDefaultBootstrapSamples, uint64_t seed = 1,
                      unsigned jobs = 0);

// Scores every reference utterance; a missing hypothesis counts as empty.
std::vector<UtteranceScore> ScoreUtterances(
    const std::map<std::string, std::vector<std::string>> &refs,
    const std::map<std::string, std::vector<std::string>> &hyps);

void WriteWerReport(const std::filesystem::path &path, const WerReport &report);

}  // namespace vsr

#endif  // VSR_EVAL_H_

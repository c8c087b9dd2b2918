// src/eval.cc

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

#include "vsr/eval.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "json.hpp"
#include "vsr/error.h"
#include "vsr/util.h"

namespace vsr {

EditCounts AlignWer(const std::vector<std::string> &ref, const std::vector<std::string> &hyp) {
  if (ref.empty()) throw UndefinedWerError("WER is undefined for an empty reference");
  const size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                          d[i][j - 1] + 1, d[i - 1][j] + 1});
  EditCounts c;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const int sub = ref[i - 1] == hyp[j - 1] ? 0 : 1;
      if (d[i][j] == d[i - 1][j - 1] + sub) {
        c.substitutions += sub;
        --i, --j;
        continue;
      }
    }
    if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      ++c.insertions;
      --j;
    } else {
      ++c.deletions;
      --i;
    }
  }
  return c;
}

std::string WerReport::FormatLine() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "WER %.1f ± %.1f", wer, (ci_high - ci_low) / 2.0);
  return buf;
}

std::string WerReport::ToJson() const {
  nlohmann::ordered_json j;
  j["substitutions"] = substitutions;
  j["insertions"] = insertions;
  j["deletions"] = deletions;
  j["reference_words"] = ref_words;
  j["wer"] = wer;
  j["ci_low"] = ci_low;
  j["ci_high"] = ci_high;
  j["bootstrap_samples"] = bootstrap_samples;
  j["seed"] = seed;
  return j.dump(2);
}

WerReport BootstrapCi(const std::vector<UtteranceScore> &scores, int samples, uint64_t seed,
                      unsigned jobs) {
  if (scores.empty()) throw UndefinedWerError("no utterances to score");
  if (samples < 100) throw ConfigError("bootstrap needs at least 100 resamples");
  WerReport r;
  r.bootstrap_samples = samples;
  r.seed = seed;
  for (const auto &s : scores) {
    r.substitutions += s.counts.substitutions;
    r.insertions += s.counts.insertions;
    r.deletions += s.counts.deletions;
    r.ref_words += s.ref_words;
  }
  if (r.ref_words == 0) throw UndefinedWerError("reference word count is zero");
  r.wer = 100.0 * (r.substitutions + r.insertions + r.deletions) / r.ref_words;

  const size_t n = scores.size();
  std::vector<double> wers(samples);
  ParallelFor(
      static_cast<size_t>(samples),
      [&](size_t b) {
        std::mt19937_64 rng(seed + b);
        std::uniform_int_distribution<size_t> pick(0, n - 1);
        long errors = 0, words = 0;
        for (size_t k = 0; k < n; ++k) {
          const UtteranceScore &s = scores[pick(rng)];
          errors += s.counts.Errors();
          words += s.ref_words;
        }
        wers[b] = words > 0 ? 100.0 * static_cast<double>(errors) / static_cast<double>(words)
                            : 0.0;
      },
      jobs);
  std::sort(wers.begin(), wers.end());
  // Nearest rank: the ceil(P * B)-th smallest value.
  const long B = samples;
  const long lo_rank = (25 * B + 999) / 1000;
  const long hi_rank = (975 * B + 999) / 1000;
  r.ci_low = wers[std::max(1L, lo_rank) - 1];
  r.ci_high = wers[std::max(1L, hi_rank) - 1];
  return r;
}

std::vector<UtteranceScore> ScoreUtterances(
    const std::map<std::string, std::vector<std::string>> &refs,
    const std::map<std::string, std::vector<std::string>> &hyps) {
  std::vector<UtteranceScore> out;
  for (const auto &[id, ref] : refs) {
    auto it = hyps.find(id);
    static const std::vector<std::string> kEmpty;
    if (it == hyps.end()) LogWarning("no hypothesis for " + id + "; scoring it as empty");
    UtteranceScore s;
    s.utterance_id = id;
    try {
      s.counts = AlignWer(ref, it == hyps.end() ? kEmpty : it->second);
    } catch (const UndefinedWerError &) {
      throw UndefinedWerError("reference of " + id + " is empty");
    }
    s.ref_words = static_cast<int>(ref.size());
    out.push_back(s);
  }
  for (const auto &[id, hyp] : hyps)
    if (!refs.count(id)) LogWarning("hypothesis for unknown utterance " + id + " ignored");
  return out;
}

void WriteWerReport(const std::filesystem::path &path, const WerReport &report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << report.ToJson() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace vsr

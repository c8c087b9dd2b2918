// include/vsr/lingware.h

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

#ifndef VSR_LINGWARE_H_
#define VSR_LINGWARE_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vsr {

using Pronunciation = std::vector<std::string>;

// Word -> pronunciations. A word may carry several pronunciations; lines are
// kept in file order.
class Lexicon {
 public:
  // Throws LexiconError on an empty pronunciation.
  void Add(const std::string &word, Pronunciation pron);
  bool Contains(const std::string &word) const { return entries_.count(word) > 0; }
  // Throws OovError for unknown words.
  const std::vector<Pronunciation> &Pronunciations(const std::string &word) const;
  // Throws LexiconError naming the word and symbol of the first phoneme that
  // is not in the inventory.
  void Validate(const std::vector<std::string> &inventory) const;

  const std::map<std::string, std::vector<Pronunciation>> &entries() const {
    return entries_;
  }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, std::vector<Pronunciation>> entries_;
};

// The 23-phoneme Spanish inventory (ASCII symbols):
//   a e i o u p b t d k g f T s x jj tS m n J l rr r
const std::vector<std::string> &SpanishPhonemeInventory();

// Rule-based Spanish grapheme-to-phoneme conversion for lowercase UTF-8
// words (accented vowels, n-tilde and u-diaeresis accepted). Convenience
// bootstrapper for real-text lexica.
Pronunciation SpanishG2P(std::string_view word);

// Lines "word ph ph ...". Validated against `inventory`.
Lexicon LoadLexicon(const std::filesystem::path &path,
                    const std::vector<std::string> &inventory = SpanishPhonemeInventory());
void WriteLexicon(const std::filesystem::path &path, const Lexicon &lexicon);

inline constexpr const char *kSentenceBegin = "<s>";
inline constexpr const char *kSentenceEnd = "</s>";

// Interpolated bigram. Probabilities are stored directly (seen bigrams) plus a
// per-context back-off mass times the unigram, which is both the Witten-Bell
// interpolation and the ARPA back-off representation of it.
class BigramLm {
 public:
  BigramLm() = default;

  // Vocabulary is sorted; ids 0..V-1 are words, EndId() is </s> and BeginId()
  // is the <s> context (never predicted).
  int VocabSize() const { return static_cast<int>(vocab_.size()); }
  int EndId() const { return VocabSize(); }
  int BeginId() const { return VocabSize() + 1; }
  // -1 when absent.
  int Id(const std::string &word) const;
  const std::vector<std::string> &vocabulary() const { return vocab_; }

  // Natural-log p(word | context) by id.
  double LogProb(int word, int context) const;
  // By string; "<s>" / "</s>" accepted. Throws OovError.
  double LogProb(const std::string &word, const std::string &context) const;
  double UnigramProb(int word) const { return unigram_[word]; }

  // Sum of log p(w_i | w_{i-1}) over <s> w_1 .. w_n </s>. Throws OovError.
  double Score(const std::vector<std::string> &words) const;

  void Save(const std::filesystem::path &path) const;  // "ALM1"
  static BigramLm Load(const std::filesystem::path &path);
  void WriteArpa(const std::filesystem::path &path) const;
  static BigramLm ReadArpa(const std::filesystem::path &path);

  struct Follower {
    double count = 0.0;
    double prob = 0.0;
  };
  struct Context {
    double backoff = 1.0;  // mass given to the unigram for unseen followers
    std::map<int, Follower> seen;
  };
  const Context &context(int id) const { return contexts_[id]; }

 private:
  friend BigramLm EstimateClosedLm(const std::vector<std::vector<std::string>> &);

  std::vector<std::string> vocab_;
  std::map<std::string, int> index_;
  std::vector<double> unigram_;   // size V + 1 (includes </s>)
  std::vector<Context> contexts_; // size V + 2 (</s> row unused)
};

// Witten-Bell interpolated bigram estimated from the given transcripts only
// (closed vocabulary):
//   p(w|v) = l_v c(vw)/c(v) + (1 - l_v) p_uni(w),  l_v = c(v) / (c(v) + T(v))
// with p_uni interpolated against the uniform distribution the same way.
BigramLm EstimateClosedLm(const std::vector<std::vector<std::string>> &transcripts);

}  // namespace vsr

#endif  // VSR_LINGWARE_H_

// src/lingware.cc

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

#include "vsr/lingware.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "vsr/binary_io.h"
#include "vsr/error.h"
#include "vsr/util.h"

namespace vsr {

void Lexicon::Add(const std::string &word, Pronunciation pron) {
  if (word.empty()) throw LexiconError("empty word in lexicon");
  if (pron.empty()) throw LexiconError("word '" + word + "' has an empty pronunciation");
  entries_[word].push_back(std::move(pron));
}

const std::vector<Pronunciation> &Lexicon::Pronunciations(const std::string &word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) throw OovError("word not in lexicon: " + word);
  return it->second;
}

void Lexicon::Validate(const std::vector<std::string> &inventory) const {
  std::set<std::string> known(inventory.begin(), inventory.end());
  for (const auto &[word, prons] : entries_)
    for (const auto &pron : prons)
      for (const auto &ph : pron)
        if (!known.count(ph))
          throw LexiconError("word '" + word + "' uses unknown phoneme '" + ph + "'");
}

const std::vector<std::string> &SpanishPhonemeInventory() {
  static const std::vector<std::string> kInventory = {
      "a", "e", "i", "o", "u", "p", "b", "t", "d", "k", "g", "f",
      "T", "s", "x", "jj", "tS", "m", "n", "J", "l", "rr", "r"};
  return kInventory;
}

Lexicon LoadLexicon(const std::filesystem::path &path,
                    const std::vector<std::string> &inventory) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon: " + path.string());
  Lexicon lex;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = SplitWhitespace(line);
    if (toks.empty()) continue;
    if (toks.size() == 1)
      throw LexiconError(path.string() + ":" + std::to_string(lineno) + ": word '" +
                         toks[0] + "' has no phonemes");
    lex.Add(toks[0], Pronunciation(toks.begin() + 1, toks.end()));
  }
  lex.Validate(inventory);
  return lex;
}

void WriteLexicon(const std::filesystem::path &path, const Lexicon &lexicon) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write lexicon: " + path.string());
  for (const auto &[word, prons] : lexicon.entries())
    for (const auto &pron : prons) out << word << ' ' << Join(pron, " ") << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// BigramLm

int BigramLm::Id(const std::string &word) const {
  if (word == kSentenceEnd) return EndId();
  if (word == kSentenceBegin) return BeginId();
  auto it = index_.find(word);
  return it == index_.end() ? -1 : it->second;
}

double BigramLm::LogProb(int word, int context) const {
  const Context &ctx = contexts_[context];
  auto it = ctx.seen.find(word);
  if (it != ctx.seen.end()) return std::log(it->second.prob);
  return std::log(ctx.backoff * unigram_[word]);
}

double BigramLm::LogProb(const std::string &word, const std::string &context) const {
  int w = Id(word), v = Id(context);
  if (w < 0 || w == BeginId()) throw OovError("word not in closed vocabulary: " + word);
  if (v < 0 || v == EndId()) throw OovError("context not in closed vocabulary: " + context);
  return LogProb(w, v);
}

double BigramLm::Score(const std::vector<std::string> &words) const {
  double total = 0.0;
  int prev = BeginId();
  for (const auto &w : words) {
    int id = Id(w);
    if (id < 0 || id >= EndId()) throw OovError("word not in closed vocabulary: " + w);
    total += LogProb(id, prev);
    prev = id;
  }
  return total + LogProb(EndId(), prev);
}

BigramLm EstimateClosedLm(const std::vector<std::vector<std::string>> &transcripts) {
  if (transcripts.empty()) throw InsufficientDataError("no transcripts for language model");
  BigramLm lm;
  std::set<std::string> vocab;
  for (const auto &t : transcripts) vocab.insert(t.begin(), t.end());
  lm.vocab_.assign(vocab.begin(), vocab.end());
  for (int i = 0; i < lm.VocabSize(); ++i) lm.index_[lm.vocab_[i]] = i;

  const int n_pred = lm.VocabSize() + 1;  // words + </s>
  std::vector<double> unigram_counts(n_pred, 0.0);
  std::vector<std::map<int, double>> bigram_counts(lm.VocabSize() + 2);
  for (const auto &t : transcripts) {
    int prev = lm.BeginId();
    for (const auto &w : t) {
      int id = lm.index_.at(w);
      unigram_counts[id] += 1.0;
      bigram_counts[prev][id] += 1.0;
      prev = id;
    }
    unigram_counts[lm.EndId()] += 1.0;
    bigram_counts[prev][lm.EndId()] += 1.0;
  }

  double total = 0.0, types = 0.0;
  for (double c : unigram_counts) {
    total += c;
    if (c > 0) types += 1.0;
  }
  const double lambda_u = total / (total + types);
  lm.unigram_.resize(n_pred);
  for (int w = 0; w < n_pred; ++w)
    lm.unigram_[w] = lambda_u * unigram_counts[w] / total + (1.0 - lambda_u) / n_pred;

  lm.contexts_.resize(lm.VocabSize() + 2);
  for (int v = 0; v < lm.VocabSize() + 2; ++v) {
    BigramLm::Context &ctx = lm.contexts_[v];
    const auto &followers = bigram_counts[v];
    double cv = 0.0;
    for (const auto &[w, c] : followers) cv += c;
    if (cv == 0.0) {
      ctx.backoff = 1.0;
      continue;
    }
    double tv = static_cast<double>(followers.size());
    double lambda = cv / (cv + tv);
    ctx.backoff = 1.0 - lambda;
    for (const auto &[w, c] : followers)
      ctx.seen[w] = {c, lambda * c / cv + (1.0 - lambda) * lm.unigram_[w]};
  }
  return lm;
}

void BigramLm::Save(const std::filesystem::path &path) const {
  BinaryWriter w(path);
  w.WriteMagic("ALM1");
  w.WriteU32(static_cast<uint32_t>(vocab_.size()));
  for (const auto &word : vocab_) w.WriteString(word);
  for (double p : unigram_) w.WriteF64(p);
  w.WriteU32(static_cast<uint32_t>(contexts_.size()));
  for (const auto &ctx : contexts_) {
    w.WriteF64(ctx.backoff);
    w.WriteU32(static_cast<uint32_t>(ctx.seen.size()));
    for (const auto &[id, f] : ctx.seen) {
      w.WriteU32(static_cast<uint32_t>(id));
      w.WriteF64(f.count);
      w.WriteF64(f.prob);
    }
  }
  w.Close();
}

BigramLm BigramLm::Load(const std::filesystem::path &path) {
  BinaryReader r(path);
  r.ExpectMagic("ALM1");
  BigramLm lm;
  uint32_t v = r.ReadU32();
  for (uint32_t i = 0; i < v; ++i) {
    lm.vocab_.push_back(r.ReadString());
    lm.index_[lm.vocab_.back()] = static_cast<int>(i);
  }
  lm.unigram_.resize(v + 1);
  for (auto &p : lm.unigram_) p = r.ReadF64();
  uint32_t n_ctx = r.ReadU32();
  if (n_ctx != v + 2) throw IoError("inconsistent context table in " + path.string());
  lm.contexts_.resize(n_ctx);
  for (auto &ctx : lm.contexts_) {
    ctx.backoff = r.ReadF64();
    uint32_t n = r.ReadU32();
    for (uint32_t k = 0; k < n; ++k) {
      uint32_t id = r.ReadU32();
      if (id > v) throw IoError("bigram follower out of range in " + path.string());
      Follower f;
      f.count = r.ReadF64();
      f.prob = r.ReadF64();
      ctx.seen[static_cast<int>(id)] = f;
    }
  }
  return lm;
}

namespace {

std::string Log10String(double p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", std::log10(p));
  return buf;
}

std::string SymbolOf(const BigramLm &lm, int id) {
  if (id == lm.EndId()) return kSentenceEnd;
  if (id == lm.BeginId()) return kSentenceBegin;
  return lm.vocabulary()[id];
}

}  // namespace

void BigramLm::WriteArpa(const std::filesystem::path &path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  size_t n_bigrams = 0;
  for (const auto &ctx : contexts_) n_bigrams += ctx.seen.size();
  out << "\n\\data\\\n";
  out << "ngram 1=" << vocab_.size() + 2 << '\n';
  out << "ngram 2=" << n_bigrams << "\n\n";
  out << "\\1-grams:\n";
  out << "-99\t" << kSentenceBegin << '\t' << Log10String(contexts_[BeginId()].backoff) << '\n';
  out << Log10String(unigram_[EndId()]) << '\t' << kSentenceEnd << '\n';
  for (int w = 0; w < VocabSize(); ++w)
    out << Log10String(unigram_[w]) << '\t' << vocab_[w] << '\t'
        << Log10String(contexts_[w].backoff) << '\n';
  out << "\n\\2-grams:\n";
  std::vector<int> order;
  order.push_back(BeginId());
  for (int w = 0; w < VocabSize(); ++w) order.push_back(w);
  for (int v : order)
    for (const auto &[w, f] : contexts_[v].seen)
      out << Log10String(f.prob) << '\t' << SymbolOf(*this, v) << ' ' << SymbolOf(*this, w)
          << '\n';
  out << "\n\\end\\\n";
  if (!out) throw IoError("write failed: " + path.string());
}

BigramLm BigramLm::ReadArpa(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  struct Uni {
    double log10p;
    double log10bow;
  };
  std::map<std::string, Uni> unigrams;
  std::vector<std::tuple<std::string, std::string, double>> bigrams;
  std::string line;
  int section = 0;
  while (std::getline(in, line)) {
    std::string t = Trim(line);
    if (t.empty()) continue;
    if (t == "\\data\\") continue;
    if (t == "\\1-grams:") { section = 1; continue; }
    if (t == "\\2-grams:") { section = 2; continue; }
    if (t == "\\end\\") break;
    if (t.rfind("ngram ", 0) == 0) continue;
    if (t[0] == '\\') throw IoError("unsupported ARPA section in " + path.string() + ": " + t);
    auto toks = SplitWhitespace(t);
    if (section == 1) {
      if (toks.size() < 2) throw IoError("bad unigram line in " + path.string());
      unigrams[toks[1]] = {std::stod(toks[0]), toks.size() > 2 ? std::stod(toks[2]) : 0.0};
    } else if (section == 2) {
      if (toks.size() < 3) throw IoError("bad bigram line in " + path.string());
      bigrams.emplace_back(toks[1], toks[2], std::stod(toks[0]));
    }
  }
  BigramLm lm;
  for (const auto &[w, u] : unigrams)
    if (w != kSentenceBegin && w != kSentenceEnd) lm.vocab_.push_back(w);
  std::sort(lm.vocab_.begin(), lm.vocab_.end());
  for (int i = 0; i < lm.VocabSize(); ++i) lm.index_[lm.vocab_[i]] = i;
  if (!unigrams.count(kSentenceEnd)) throw IoError("ARPA file lacks </s>: " + path.string());
  lm.unigram_.resize(lm.VocabSize() + 1);
  lm.contexts_.resize(lm.VocabSize() + 2);
  for (const auto &[w, u] : unigrams) {
    int id = lm.Id(w);
    if (id != lm.BeginId()) lm.unigram_[id] = std::pow(10.0, u.log10p);
    if (id != lm.EndId()) lm.contexts_[id].backoff = std::pow(10.0, u.log10bow);
  }
  for (const auto &[v, w, lp] : bigrams) {
    int vi = lm.Id(v), wi = lm.Id(w);
    if (vi < 0 || wi < 0 || vi == lm.EndId() || wi == lm.BeginId())
      throw IoError("bigram over unknown words in " + path.string());
    lm.contexts_[vi].seen[wi] = {0.0, std::pow(10.0, lp)};
  }
  return lm;
}

}  // namespace vsr

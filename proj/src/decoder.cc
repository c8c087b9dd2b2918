// src/decoder.cc

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

#include "vsr/decoder.h"

#include <cmath>
#include <fstream>

#include "vsr/error.h"
#include "vsr/util.h"

namespace vsr {

void DecodeConfig::Validate() const {
  if (!(lm_scale > 0.0) || !std::isfinite(lm_scale))
    throw ConfigError("lm_scale must be a positive number");
  if (!std::isfinite(word_insertion_penalty))
    throw ConfigError("word insertion penalty must be finite");
  if (!(beam > 0.0)) throw ConfigError("beam must be positive (or inf)");
}

Decoder::Decoder(const OpticalModel &model, const Lexicon &lexicon, const BigramLm &lm,
                 const DecodeConfig &config)
    : model_(model), lm_(lm), config_(config) {
  config_.Validate();
  if (lm.VocabSize() == 0) throw ConfigError("language model has an empty vocabulary");
  auto phones_of = [&](const std::string &word, const Pronunciation &pron) {
    std::vector<int> out;
    for (const auto &ph : pron) {
      const int p = model.PhoneIndex(ph);
      if (p < 0)
        throw LexiconError("word '" + word + "' uses phoneme '" + ph + "' with no optical model");
      out.push_back(p);
    }
    return out;
  };
  if (model.use_silence()) lead_sil_ = AddUnit({model.SilenceIndex()}, -1);
  first_word_unit_ = static_cast<int>(units_.size());
  for (int w = 0; w < lm.VocabSize(); ++w) {
    const std::string &word = lm.vocabulary()[w];
    for (const auto &pron : lexicon.Pronunciations(word)) AddUnit(phones_of(word, pron), w);
  }
  if (model.use_silence()) tail_sil_ = AddUnit({model.SilenceIndex()}, -1);
}

int Decoder::AddUnit(const std::vector<int> &phones, int word) {
  Unit u;
  u.word = word;
  u.first_state = static_cast<int>(state_global_.size());
  for (size_t k = 0; k < phones.size(); ++k) {
    const HmmTopology &topo = model_.phone(phones[k]).topology;
    const int n = topo.NumStates();
    const int base = static_cast<int>(state_global_.size());
    for (int i = 0; i < n; ++i) state_global_.push_back(model_.StateOffset(phones[k]) + i);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j)
        if (topo.Allowed(i, j))
          arcs_.push_back({base + i, base + j, std::log(topo.transitions(i, j))});
      if (!topo.Allowed(i, n)) continue;
      const double lp = std::log(topo.transitions(i, n));
      if (k + 1 < phones.size())
        arcs_.push_back({base + i, base + n, lp});
      else
        u.exits.push_back({base + i, lp});
    }
  }
  u.num_states = static_cast<int>(state_global_.size()) - u.first_state;
  units_.push_back(std::move(u));
  return static_cast<int>(units_.size()) - 1;
}

DecodeResult Decoder::Decode(const Eigen::MatrixXd &features) const {
  return DecodeLogLikelihoods(StateLogLikelihoods(model_, features));
}

namespace {

struct WordLink {
  int word;
  int prev;
  int end;  // one past the last frame
};

}  // namespace

DecodeResult Decoder::DecodeLogLikelihoods(const Eigen::MatrixXd &loglikes) const {
  const int T = static_cast<int>(loglikes.rows());
  if (loglikes.cols() != model_.NumEmittingStates())
    throw ShapeError("log-likelihood matrix has the wrong number of states");
  if (T == 0) throw AlignmentInfeasibleError("cannot decode an empty feature sequence");
  const int S = static_cast<int>(state_global_.size());
  const int V = lm_.VocabSize();
  const bool sil = lead_sil_ >= 0;
  const double log_sil = sil ? std::log(model_.silence_prob()) : 0.0;
  const double log_nosil = sil ? std::log1p(-model_.silence_prob()) : 0.0;
  const double lm_scale = config_.lm_scale;
  const double penalty = config_.word_insertion_penalty;

  std::vector<WordLink> links;
  // Lexicographic order of the word sequences behind two links.
  auto history_less = [&](int a, int b) {
    if (a == b) return false;
    std::vector<int> wa, wb;
    for (int l = a; l >= 0; l = links[l].prev) wa.push_back(links[l].word);
    for (int l = b; l >= 0; l = links[l].prev) wb.push_back(links[l].word);
    return std::lexicographical_compare(wa.rbegin(), wa.rend(), wb.rbegin(), wb.rend());
  };
  auto better = [&](double a, int la, double b, int lb) {
    return a > b || (a == b && a > kLogZero && history_less(la, lb));
  };

  std::vector<double> cur(S, kLogZero), nxt(S);
  std::vector<int> cur_link(S, -1), nxt_link(S);
  std::vector<double> end_score(V, kLogZero), new_end(V);
  std::vector<int> end_link(V, -1), new_end_link(V);
  std::vector<double> entry(V);
  std::vector<int> entry_link(V);
  double lead_end = kLogZero;

  auto relax = [&](int s, double score, int link) {
    if (better(score, link, nxt[s], nxt_link[s])) {
      nxt[s] = score;
      nxt_link[s] = link;
    }
  };

  for (int t = 0; t < T; ++t) {
    std::fill(nxt.begin(), nxt.end(), kLogZero);
    std::fill(nxt_link.begin(), nxt_link.end(), -1);
    if (t == 0) {
      if (sil) relax(units_[lead_sil_].first_state, log_sil, -1);
      for (int w = 0; w < V; ++w) {
        entry[w] = log_nosil + lm_scale * lm_.LogProb(w, lm_.BeginId()) + penalty;
        entry_link[w] = -1;
      }
    } else {
      for (const Arc &a : arcs_)
        if (cur[a.from] > kLogZero) relax(a.to, cur[a.from] + a.log_prob, cur_link[a.from]);
      for (int w = 0; w < V; ++w) {
        double best = kLogZero;
        int best_link = -1;
        if (lead_end > kLogZero) best = lead_end + lm_scale * lm_.LogProb(w, lm_.BeginId());
        for (int v = 0; v < V; ++v) {
          if (end_score[v] == kLogZero) continue;
          const double cand = end_score[v] + lm_scale * lm_.LogProb(w, v);
          if (better(cand, end_link[v], best, best_link)) {
            best = cand;
            best_link = end_link[v];
          }
        }
        entry[w] = best == kLogZero ? kLogZero : best + penalty;
        entry_link[w] = best_link;
      }
      if (sil) {
        double best = kLogZero;
        int best_link = -1;
        for (int v = 0; v < V; ++v) {
          if (end_score[v] == kLogZero) continue;
          const double cand = end_score[v] + log_sil + lm_scale * lm_.LogProb(lm_.EndId(), v);
          if (better(cand, end_link[v], best, best_link)) {
            best = cand;
            best_link = end_link[v];
          }
        }
        if (best > kLogZero) relax(units_[tail_sil_].first_state, best, best_link);
      }
    }
    for (size_t u = first_word_unit_; u < units_.size(); ++u) {
      if (static_cast<int>(u) == tail_sil_) continue;
      const int w = units_[u].word;
      if (entry[w] > kLogZero) relax(units_[u].first_state, entry[w], entry_link[w]);
    }

    double frame_best = kLogZero;
    for (int s = 0; s < S; ++s) {
      if (nxt[s] == kLogZero) continue;
      nxt[s] += loglikes(t, state_global_[s]);
      frame_best = std::max(frame_best, nxt[s]);
    }
    if (frame_best == kLogZero)
      throw EmptyBeamError("no hypothesis survives frame " + std::to_string(t) +
                           "; try a larger beam");
    if (std::isfinite(config_.beam)) {
      const double threshold = frame_best - config_.beam;
      for (int s = 0; s < S; ++s)
        if (nxt[s] < threshold) nxt[s] = kLogZero;
    }

    // Word ends after frame t.
    std::fill(new_end.begin(), new_end.end(), kLogZero);
    std::fill(new_end_link.begin(), new_end_link.end(), -1);
    std::vector<int> prev_of(V, -1);
    for (size_t u = first_word_unit_; u < units_.size(); ++u) {
      if (static_cast<int>(u) == tail_sil_) continue;
      const int w = units_[u].word;
      for (const auto &[s, lp] : units_[u].exits) {
        if (nxt[s] == kLogZero) continue;
        const double cand = nxt[s] + lp;
        if (better(cand, nxt_link[s], new_end[w], prev_of[w])) {
          new_end[w] = cand;
          prev_of[w] = nxt_link[s];
        }
      }
    }
    for (int w = 0; w < V; ++w) {
      if (new_end[w] == kLogZero) continue;
      links.push_back({w, prev_of[w], t + 1});
      new_end_link[w] = static_cast<int>(links.size()) - 1;
    }
    lead_end = kLogZero;
    if (sil)
      for (const auto &[s, lp] : units_[lead_sil_].exits)
        if (nxt[s] > kLogZero) lead_end = std::max(lead_end, nxt[s] + lp);

    std::swap(cur, nxt);
    std::swap(cur_link, nxt_link);
    std::swap(end_score, new_end);
    std::swap(end_link, new_end_link);
  }

  double best = kLogZero;
  int best_link = -1;
  for (int v = 0; v < V; ++v) {
    if (end_score[v] == kLogZero) continue;
    const double cand = end_score[v] + log_nosil + lm_scale * lm_.LogProb(lm_.EndId(), v);
    if (better(cand, end_link[v], best, best_link)) {
      best = cand;
      best_link = end_link[v];
    }
  }
  if (sil)
    for (const auto &[s, lp] : units_[tail_sil_].exits)
      if (cur[s] > kLogZero && better(cur[s] + lp, cur_link[s], best, best_link)) {
        best = cur[s] + lp;
        best_link = cur_link[s];
      }
  if (best == kLogZero) {
    if (std::isfinite(config_.beam))
      throw EmptyBeamError("no complete hypothesis within the beam; try a larger beam");
    throw AlignmentInfeasibleError(std::to_string(T) + " frames are too few for any word");
  }

  DecodeResult result;
  result.score = best;
  std::vector<int> chain;
  for (int l = best_link; l >= 0; l = links[l].prev) chain.push_back(l);
  int begin = 0;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const WordLink &link = links[*it];
    result.words.push_back(lm_.vocabulary()[link.word]);
    const int end = std::next(it) == chain.rend() ? T : link.end;
    result.boundaries.push_back({begin, end});
    begin = end;
  }
  return result;
}

void WriteHypotheses(const std::filesystem::path &path,
                     const std::vector<std::pair<std::string, std::vector<std::string>>> &hyps) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto &[utt, words] : hyps) out << utt << '\t' << Join(words, " ") << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::pair<std::string, std::vector<std::string>>> ReadTranscriptFile(
    const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    const auto tab = line.find('\t');
    const std::string id = Trim(line.substr(0, tab));
    if (id.empty())
      throw IngestError(path.string() + ":" + std::to_string(lineno) + ": missing utterance id");
    out.push_back({id, tab == std::string::npos ? std::vector<std::string>{}
                                                : SplitWhitespace(line.substr(tab + 1))});
  }
  return out;
}

}  // namespace vsr

// tests/oracles.cc

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

#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace vsr::testing {

void JacobiEigen(const Eigen::MatrixXd &sym, Eigen::VectorXd *values, Eigen::MatrixXd *vectors) {
  const int n = static_cast<int>(sym.rows());
  std::vector<std::vector<double>> a(n, std::vector<double>(n)), v(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i][j] = sym(i, j);
    v[i][i] = 1.0;
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) total += a[i][j] * a[i][j];
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off <= 1e-30 * total) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p][q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {  // columns p, q
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {  // rows p, q
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a[x][x] > a[y][y]; });
  values->resize(n);
  vectors->resize(n, n);
  for (int k = 0; k < n; ++k) {
    (*values)[k] = a[order[k]][order[k]];
    for (int i = 0; i < n; ++i) (*vectors)(i, k) = v[i][order[k]];
  }
}

BruteEdit BruteForceEdit(const std::vector<std::string> &ref, const std::vector<std::string> &hyp) {
  BruteEdit out;
  out.cost = std::numeric_limits<int>::max();
  std::function<void(size_t, size_t, int, int, int)> go = [&](size_t i, size_t j, int s, int ins,
                                                             int del) {
    if (i == ref.size() && j == hyp.size()) {
      const int cost = s + ins + del;
      if (cost < out.cost) {
        out.cost = cost;
        out.optimal.clear();
      }
      if (cost == out.cost) out.optimal.insert({s, ins, del});
      return;
    }
    if (i < ref.size() && j < hyp.size()) go(i + 1, j + 1, s + (ref[i] != hyp[j]), ins, del);
    if (j < hyp.size()) go(i, j + 1, s, ins + 1, del);
    if (i < ref.size()) go(i + 1, j, s, ins, del + 1);
  };
  go(0, 0, 0, 0, 0);
  return out;
}

namespace {

// Best log score of any state path that consumes frames [0, T) of `ll`
// through the phone chain, entering its first state at frame 0 and leaving
// the last phone exactly after frame T - 1. Plain depth-first enumeration.
double BestChainPath(const OpticalModel &model, const std::vector<int> &chain,
                     const Eigen::MatrixXd &ll) {
  const int T = static_cast<int>(ll.rows());
  // min_after[k]: fewest frames the phones after position k need.
  std::vector<int> min_after(chain.size() + 1, 0);
  for (size_t k = chain.size(); k-- > 0;)
    min_after[k] = min_after[k + 1] + (k + 1 < chain.size() ? model.phone(chain[k + 1]).topology.MinFrames() : 0);
  double best = kLogZero;
  if (min_after[0] + model.phone(chain[0]).topology.MinFrames() > T) return best;
  std::function<void(size_t, int, int, double)> go = [&](size_t k, int i, int t, double acc) {
    const HmmTopology &topo = model.phone(chain[k]).topology;
    const int n = topo.NumStates();
    acc += ll(t, model.StateOffset(chain[k]) + i);
    if (t == T - 1) {
      if (k + 1 == chain.size() && topo.transitions(i, n) > 0)
        best = std::max(best, acc + std::log(topo.transitions(i, n)));
      return;
    }
    if (T - 1 - t < min_after[k]) return;
    for (int j = i; j < n; ++j)
      if (topo.transitions(i, j) > 0) go(k, j, t + 1, acc + std::log(topo.transitions(i, j)));
    if (k + 1 < chain.size() && topo.transitions(i, n) > 0)
      go(k + 1, 0, t + 1, acc + std::log(topo.transitions(i, n)));
  };
  go(0, 0, 0, 0.0);
  return best;
}

}  // namespace

ExhaustiveResult ExhaustiveDecode(const OpticalModel &model, const Lexicon &lexicon,
                                  const BigramLm &lm, const DecodeConfig &config,
                                  const Eigen::MatrixXd &loglikes, int max_words) {
  ExhaustiveResult best;
  const auto &vocab = lm.vocabulary();
  const int V = static_cast<int>(vocab.size());
  const bool sil = model.use_silence();
  const double p = model.silence_prob();
  auto consider = [&](double score, const std::vector<std::string> &words) {
    if (score > best.score || (score == best.score && score > kLogZero && words < best.words)) {
      best.score = score;
      best.words = words;
    }
  };
  for (int len = 1; len <= max_words; ++len) {
    std::vector<int> ids(len, 0);
    while (true) {
      std::vector<std::string> words;
      for (int id : ids) words.push_back(vocab[id]);
      double lm_score = 0.0;
      std::string prev = kSentenceBegin;
      for (const auto &w : words) {
        lm_score += lm.LogProb(w, prev);
        prev = w;
      }
      lm_score += lm.LogProb(kSentenceEnd, prev);
      const double base = config.lm_scale * lm_score + config.word_insertion_penalty * len;

      // Every pronunciation combination.
      std::vector<size_t> pick(len, 0);
      while (true) {
        std::vector<int> phones;
        for (int k = 0; k < len; ++k)
          for (const auto &ph : lexicon.Pronunciations(words[k])[pick[k]])
            phones.push_back(model.PhoneIndex(ph));
        for (int lead = 0; lead <= (sil ? 1 : 0); ++lead)
          for (int tail = 0; tail <= (sil ? 1 : 0); ++tail) {
            std::vector<int> chain;
            if (lead) chain.push_back(model.SilenceIndex());
            chain.insert(chain.end(), phones.begin(), phones.end());
            if (tail) chain.push_back(model.SilenceIndex());
            double edges = 0.0;
            if (sil)
              edges = (lead ? std::log(p) : std::log(1 - p)) + (tail ? std::log(p) : std::log(1 - p));
            const double path = BestChainPath(model, chain, loglikes);
            if (path > kLogZero) consider(base + edges + path, words);
          }
        int k = len - 1;
        while (k >= 0 && ++pick[k] == lexicon.Pronunciations(words[k]).size()) pick[k--] = 0;
        if (k < 0) break;
      }

      int k = len - 1;
      while (k >= 0 && ++ids[k] == V) ids[k--] = 0;
      if (k < 0) break;
    }
  }
  return best;
}

ToyDecodeProblem MakeToyDecodeProblem(std::mt19937_64 &rng, int T, TopologyKind topology,
                                      bool use_silence) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  auto random_topology = [&]() {
    HmmTopology topo = HmmTopology::Build(topology);
    for (int i = 0; i < topo.NumStates(); ++i) {
      double sum = 0.0;
      for (int j = 0; j <= topo.NumStates(); ++j)
        if (topo.transitions(i, j) > 0) sum += topo.transitions(i, j) = u(rng);
      topo.transitions.row(i) /= sum;
    }
    return topo;
  };
  std::vector<std::string> names = {"a", "b"};
  if (use_silence) names.push_back(kSilencePhone);
  std::vector<PhoneModel> phones;
  for (const auto &name : names) {
    PhoneModel pm;
    pm.name = name;
    pm.topology = random_topology();
    for (int i = 0; i < pm.topology.NumStates(); ++i)
      pm.states.emplace_back(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1),
                             Eigen::MatrixXd::Ones(1, 1));
    phones.push_back(std::move(pm));
  }
  ToyDecodeProblem prob;
  prob.model = MakeOpticalModel(1, std::move(phones), use_silence, 0.2 + 0.6 * u(rng),
                                Eigen::VectorXd::Zero(1));

  const int V = 2 + static_cast<int>(rng() % 2);
  std::vector<std::string> vocab;
  for (int w = 0; w < V; ++w) {
    vocab.push_back("w" + std::to_string(w));
    const int n_prons = 1 + (rng() % 4 == 0);
    for (int k = 0; k < n_prons; ++k) {
      Pronunciation pron;
      const int len = 1 + static_cast<int>(rng() % 2);
      for (int i = 0; i < len; ++i) pron.push_back(rng() % 2 ? "a" : "b");
      prob.lexicon.Add(vocab.back(), pron);
    }
  }
  std::vector<std::vector<std::string>> text;
  for (int s = 0; s < 4; ++s) {
    std::vector<std::string> sent;
    const int len = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < len; ++i) sent.push_back(vocab[rng() % V]);
    text.push_back(sent);
  }
  for (const auto &w : vocab) text.push_back({w});
  prob.lm = EstimateClosedLm(text);

  std::normal_distribution<double> g(0.0, 2.0);
  prob.loglikes.resize(T, prob.model.NumEmittingStates());
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < prob.loglikes.cols(); ++s) prob.loglikes(t, s) = g(rng);
  return prob;
}

}  // namespace vsr::testing

// src/optical_model.cc

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

#include "vsr/optical_model.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vsr/binary_io.h"
#include "vsr/error.h"

namespace vsr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string TopologyName(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kClassic3: return "classic3";
    case TopologyKind::kSkip2: return "skip2";
    case TopologyKind::kCustom: return "custom";
  }
  return "custom";
}

TopologyKind ParseTopology(const std::string &name) {
  if (name == "classic3") return TopologyKind::kClassic3;
  if (name == "skip2") return TopologyKind::kSkip2;
  throw ConfigError("unknown topology '" + name + "' (expected classic3 or skip2)");
}

int HmmTopology::MinFrames() const {
  const int n = NumStates();
  constexpr int kInf = 1 << 29;
  std::vector<int> dist(n, kInf);
  dist[0] = 1;
  int best = kInf;
  for (int i = 0; i < n; ++i) {
    if (dist[i] == kInf) continue;
    for (int j = i + 1; j < n; ++j)
      if (Allowed(i, j)) dist[j] = std::min(dist[j], dist[i] + 1);
    if (Allowed(i, n)) best = std::min(best, dist[i]);
  }
  return best;
}

int HmmTopology::NumArcs() const {
  return static_cast<int>((transitions.array() > 0.0).count());
}

HmmTopology HmmTopology::Build(TopologyKind kind) {
  MatrixXd t;
  switch (kind) {
    case TopologyKind::kClassic3:
      t = MatrixXd::Zero(3, 4);
      t(0, 0) = t(0, 1) = 0.5;
      t(1, 1) = t(1, 2) = 0.5;
      t(2, 2) = t(2, 3) = 0.5;
      break;
    case TopologyKind::kSkip2:
      t = MatrixXd::Zero(2, 3);
      t(0, 0) = t(0, 1) = t(0, 2) = 1.0 / 3.0;
      t(1, 1) = t(1, 2) = 0.5;
      break;
    case TopologyKind::kCustom:
      throw ConfigError("custom topologies need an explicit transition matrix");
  }
  HmmTopology topo;
  topo.kind = kind;
  topo.transitions = t;
  return topo;
}

HmmTopology HmmTopology::Custom(const MatrixXd &transitions) {
  const Eigen::Index n = transitions.rows();
  if (n < 1 || transitions.cols() != n + 1)
    throw ConfigError("transition matrix must be n x (n + 1)");
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j <= n; ++j) {
      const double p = transitions(i, j);
      if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("invalid transition probability");
      if (p > 0.0 && j < i) throw ConfigError("topology is not left-to-right");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-10)
      throw ConfigError("transition row " + std::to_string(i) + " does not sum to 1");
  }
  HmmTopology topo;
  topo.kind = TopologyKind::kCustom;
  topo.transitions = transitions;
  // Every state must be able to leave towards the exit.
  std::vector<bool> reaches(n, false);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    if (topo.Allowed(i, n)) reaches[i] = true;
    for (Eigen::Index j = i + 1; j < n && !reaches[i]; ++j)
      if (topo.Allowed(i, j) && reaches[j]) reaches[i] = true;
    if (!reaches[i]) throw ConfigError("state " + std::to_string(i) + " cannot reach the exit");
  }
  return topo;
}

// ---------------------------------------------------------------------------

DiagGmm::DiagGmm(VectorXd weights, MatrixXd means, MatrixXd variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  if (weights_.size() < 1 || means_.rows() != weights_.size() ||
      variances_.rows() != weights_.size() || variances_.cols() != means_.cols())
    throw ShapeError("inconsistent GMM parameter shapes");
  if ((variances_.array() <= 0.0).any()) throw ShapeError("GMM variances must be positive");
  ComputeGconsts();
}

void DiagGmm::ComputeGconsts() {
  inv_vars_ = variances_.cwiseInverse();
  const double d = static_cast<double>(means_.cols());
  gconsts_.resize(weights_.size());
  for (Eigen::Index m = 0; m < weights_.size(); ++m)
    gconsts_[m] = std::log(weights_[m]) -
                  0.5 * (d * std::log(2.0 * std::numbers::pi) +
                         variances_.row(m).array().log().sum());
}

void DiagGmm::ComponentLogLikelihoods(const Eigen::Ref<const VectorXd> &x, VectorXd *out) const {
  out->resize(weights_.size());
  for (Eigen::Index m = 0; m < weights_.size(); ++m)
    (*out)[m] = gconsts_[m] - 0.5 * ((x.transpose() - means_.row(m)).array().square() *
                                     inv_vars_.row(m).array())
                                        .sum();
}

double DiagGmm::LogLikelihood(const Eigen::Ref<const VectorXd> &x) const {
  VectorXd c;
  ComponentLogLikelihoods(x, &c);
  double total = kLogZero;
  for (Eigen::Index m = 0; m < c.size(); ++m) total = LogAdd(total, c[m]);
  return total;
}

namespace {

// T x M component log-likelihoods for a whole feature matrix.
MatrixXd ComponentMatrix(const DiagGmm &g, const MatrixXd &x) {
  MatrixXd out(x.rows(), g.NumComponents());
  for (int m = 0; m < g.NumComponents(); ++m) {
    const Eigen::RowVectorXd mu = g.means().row(m);
    const Eigen::RowVectorXd iv = g.variances().row(m).cwiseInverse();
    const double gconst =
        std::log(g.weights()[m]) -
        0.5 * (static_cast<double>(x.cols()) * std::log(2.0 * std::numbers::pi) +
               g.variances().row(m).array().log().sum());
    out.col(m) = (gconst - 0.5 * ((x.rowwise() - mu).array().square().rowwise() * iv.array())
                                     .rowwise()
                                     .sum())
                     .matrix();
  }
  return out;
}

double LogSumRow(const Eigen::Ref<const Eigen::RowVectorXd> &row) {
  const double mx = row.maxCoeff();
  if (mx == kLogZero) return kLogZero;
  return mx + std::log((row.array() - mx).exp().sum());
}

}  // namespace

// ---------------------------------------------------------------------------

int OpticalModel::PhoneIndex(const std::string &name) const {
  auto it = phone_index_.find(name);
  return it == phone_index_.end() ? -1 : it->second;
}

const DiagGmm &OpticalModel::Gmm(int global_state) const {
  const int p = state_phone_.at(global_state);
  return phones_[p].states[global_state - state_offset_[p]];
}

void OpticalModel::Index() {
  phone_index_.clear();
  state_offset_.clear();
  state_phone_.clear();
  for (int p = 0; p < NumPhones(); ++p) {
    if (!phone_index_.emplace(phones_[p].name, p).second)
      throw ConfigError("duplicate phone '" + phones_[p].name + "' in optical model");
    if (static_cast<int>(phones_[p].states.size()) != phones_[p].topology.NumStates())
      throw ShapeError("phone '" + phones_[p].name + "' state count disagrees with topology");
    state_offset_.push_back(static_cast<int>(state_phone_.size()));
    for (int s = 0; s < phones_[p].topology.NumStates(); ++s) {
      if (phones_[p].states[s].Dim() != dim_)
        throw ShapeError("phone '" + phones_[p].name + "' has wrong feature dimension");
      state_phone_.push_back(p);
    }
  }
  if (use_silence_ && PhoneIndex(kSilencePhone) < 0)
    throw ConfigError("optional silence enabled but no 'sil' model");
}

void OpticalModel::CheckLexicon(const Lexicon &lexicon) const {
  for (const auto &[word, prons] : lexicon.entries())
    for (const auto &pron : prons)
      for (const auto &ph : pron)
        if (PhoneIndex(ph) < 0)
          throw LexiconError("word '" + word + "' uses phoneme '" + ph +
                             "' which has no optical model");
}

OpticalModel MakeOpticalModel(int dim, std::vector<PhoneModel> phones, bool use_silence,
                              double silence_prob, VectorXd variance_floor) {
  if (!(silence_prob > 0.0 && silence_prob < 1.0))
    throw ConfigError("silence probability must be in (0, 1)");
  OpticalModel m;
  m.dim_ = dim;
  m.phones_ = std::move(phones);
  m.use_silence_ = use_silence;
  m.silence_prob_ = silence_prob;
  m.variance_floor_ =
      variance_floor.size() == dim ? std::move(variance_floor) : VectorXd::Zero(dim);
  m.Index();
  return m;
}

void OpticalModel::Save(const std::filesystem::path &path) const {
  BinaryWriter w(path);
  w.WriteMagic("OPT1");
  w.WriteU32(static_cast<uint32_t>(dim_));
  w.WriteU32(static_cast<uint32_t>(phones_.size()));
  for (const auto &p : phones_) w.WriteString(p.name);
  w.WriteU8(use_silence_ ? 1 : 0);
  w.WriteF64(silence_prob_);
  for (Eigen::Index d = 0; d < dim_; ++d) w.WriteF64(variance_floor_[d]);
  for (const auto &p : phones_) {
    const int n = p.topology.NumStates();
    w.WriteU8(static_cast<uint8_t>(p.topology.kind));
    w.WriteU32(static_cast<uint32_t>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= n; ++j) w.WriteF64(p.topology.transitions(i, j));
    for (int i = 0; i < n; ++i) w.WriteF64(i == 0 ? 1.0 : 0.0);
    for (const auto &g : p.states) {
      w.WriteU32(static_cast<uint32_t>(g.NumComponents()));
      for (int m = 0; m < g.NumComponents(); ++m) w.WriteF64(g.weights()[m]);
      for (int m = 0; m < g.NumComponents(); ++m)
        for (int d = 0; d < dim_; ++d) w.WriteF64(g.means()(m, d));
      for (int m = 0; m < g.NumComponents(); ++m)
        for (int d = 0; d < dim_; ++d) w.WriteF64(g.variances()(m, d));
    }
  }
  w.Close();
}

OpticalModel OpticalModel::Load(const std::filesystem::path &path) {
  BinaryReader r(path);
  r.ExpectMagic("OPT1");
  const int dim = static_cast<int>(r.ReadU32());
  const uint32_t n_phones = r.ReadU32();
  if (dim < 1 || n_phones < 1 || n_phones > 4096) throw IoError(path.string() + ": bad header");
  std::vector<PhoneModel> phones(n_phones);
  for (auto &p : phones) p.name = r.ReadString();
  const bool use_sil = r.ReadU8() != 0;
  const double sil_prob = r.ReadF64();
  VectorXd floor(dim);
  for (auto &v : floor) v = r.ReadF64();
  for (auto &p : phones) {
    const uint8_t kind = r.ReadU8();
    const uint32_t n = r.ReadU32();
    if (kind > 2 || n < 1 || n > 64) throw IoError(path.string() + ": bad topology record");
    MatrixXd t(n, n + 1);
    for (uint32_t i = 0; i < n; ++i)
      for (uint32_t j = 0; j <= n; ++j) t(i, j) = r.ReadF64();
    for (uint32_t i = 0; i < n; ++i) r.ReadF64();
    p.topology.kind = static_cast<TopologyKind>(kind);
    p.topology.transitions = t;
    for (uint32_t s = 0; s < n; ++s) {
      const uint32_t m = r.ReadU32();
      if (m < 1 || m > 4096) throw IoError(path.string() + ": bad mixture count");
      VectorXd weights(m);
      MatrixXd means(m, dim), vars(m, dim);
      for (auto &v : weights) v = r.ReadF64();
      for (uint32_t c = 0; c < m; ++c)
        for (int d = 0; d < dim; ++d) means(c, d) = r.ReadF64();
      for (uint32_t c = 0; c < m; ++c)
        for (int d = 0; d < dim; ++d) vars(c, d) = r.ReadF64();
      p.states.emplace_back(std::move(weights), std::move(means), std::move(vars));
    }
  }
  return MakeOpticalModel(dim, std::move(phones), use_sil, sil_prob, std::move(floor));
}

// ---------------------------------------------------------------------------

namespace {

void CheckTranscripts(const std::vector<std::vector<std::string>> &transcripts,
                      const Lexicon &lexicon) {
  for (const auto &words : transcripts)
    for (const auto &w : words) lexicon.Pronunciations(w);
}

}  // namespace

OpticalModel FlatStart(const std::vector<FeatureSequence> &features,
                       const std::vector<std::vector<std::string>> &transcripts,
                       const Lexicon &lexicon, const FlatStartOptions &options) {
  if (features.size() != transcripts.size())
    throw ShapeError("feature and transcript counts differ");
  CheckTranscripts(transcripts, lexicon);
  lexicon.Validate(options.inventory);
  if (!(options.variance_floor_factor > 0.0))
    throw ConfigError("variance floor factor must be positive");

  double count = 0.0;
  VectorXd sum;
  for (const auto &f : features) {
    if (f.NumFrames() == 0) continue;
    if (sum.size() == 0) sum = VectorXd::Zero(f.Dim());
    if (f.Dim() != sum.size())
      throw ShapeError("utterance " + f.utterance_id + " has dimension " +
                       std::to_string(f.Dim()) + ", expected " + std::to_string(sum.size()));
    sum += f.frames.colwise().sum().transpose();
    count += f.NumFrames();
  }
  if (count == 0.0) throw InsufficientDataError("no training frames for flat start");
  const VectorXd mean = sum / count;
  VectorXd sq = VectorXd::Zero(mean.size());
  for (const auto &f : features)
    if (f.NumFrames() > 0)
      sq += (f.frames.rowwise() - mean.transpose()).array().square().colwise().sum().matrix()
                .transpose();
  const VectorXd var = sq / count;
  const VectorXd floor = (options.variance_floor_factor * var).cwiseMax(1e-6);
  const VectorXd init_var = var.cwiseMax(floor);

  const HmmTopology topo = HmmTopology::Build(options.topology);
  const DiagGmm g(VectorXd::Ones(1), mean.transpose(), init_var.transpose());
  std::vector<std::string> names = options.inventory;
  if (options.use_silence) names.push_back(kSilencePhone);
  std::vector<PhoneModel> phones;
  for (const auto &name : names)
    phones.push_back({name, topo, std::vector<DiagGmm>(topo.NumStates(), g)});
  return MakeOpticalModel(static_cast<int>(mean.size()), std::move(phones), options.use_silence,
                          0.5, floor);
}

// ---------------------------------------------------------------------------

int UtteranceHmm::MinFrames() const {
  constexpr int kInf = 1 << 29;
  const int n = NumStates();
  std::vector<int> dist(n, kInf);
  for (const auto &[s, lp] : entries)
    if (lp > kLogZero) dist[s] = 1;
  int best = kInf;
  // Arcs only go forward, and are stored grouped by source in index order.
  for (const auto &a : arcs) {
    if (dist[a.from] == kInf || a.log_prob == kLogZero) continue;
    if (a.to == n)
      best = std::min(best, dist[a.from]);
    else if (a.to != a.from)
      dist[a.to] = std::min(dist[a.to], dist[a.from] + 1);
  }
  return best;
}

UtteranceHmm ComposeUtteranceHmm(const OpticalModel &model, const std::vector<std::string> &words,
                                 const Lexicon &lexicon) {
  if (words.empty()) throw AlignmentInfeasibleError("empty transcript");
  std::vector<int> instances;
  const int sil = model.SilenceIndex();
  if (sil >= 0) instances.push_back(sil);
  for (const auto &w : words)
    for (const auto &ph : lexicon.Pronunciations(w).front()) {
      const int p = model.PhoneIndex(ph);
      if (p < 0) throw LexiconError("word '" + w + "' uses phoneme '" + ph + "' with no model");
      instances.push_back(p);
    }
  if (sil >= 0) instances.push_back(sil);
  const int n_inst = static_cast<int>(instances.size());
  const int last_real = sil >= 0 ? n_inst - 2 : n_inst - 1;
  const double log_sil = sil >= 0 ? std::log(model.silence_prob()) : 0.0;
  const double log_nosil = sil >= 0 ? std::log1p(-model.silence_prob()) : 0.0;

  UtteranceHmm hmm;
  std::vector<int> offset(n_inst + 1, 0);
  for (int k = 0; k < n_inst; ++k) {
    offset[k] = hmm.NumStates();
    const int p = instances[k];
    for (int s = 0; s < model.phone(p).topology.NumStates(); ++s)
      hmm.states.push_back({p, s, model.StateOffset(p) + s, k});
  }
  offset[n_inst] = hmm.NumStates();
  const int exit = hmm.NumStates();

  if (sil >= 0) {
    hmm.entries.push_back({offset[0], log_sil});
    hmm.entries.push_back({offset[1], log_nosil});
  } else {
    hmm.entries.push_back({0, 0.0});
  }

  for (int k = 0; k < n_inst; ++k) {
    const int p = instances[k];
    const HmmTopology &topo = model.phone(p).topology;
    const int n = topo.NumStates();
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j)
        if (topo.Allowed(i, j))
          hmm.arcs.push_back({offset[k] + i, offset[k] + j, std::log(topo.transitions(i, j)), p,
                              i, j});
      if (!topo.Allowed(i, n)) continue;
      const double lp = std::log(topo.transitions(i, n));
      const int from = offset[k] + i;
      if (sil >= 0 && k == 0) {
        hmm.arcs.push_back({from, offset[1], lp, p, i, n});
      } else if (k == last_real && sil >= 0) {
        hmm.arcs.push_back({from, offset[k + 1], lp + log_sil, p, i, n});
        hmm.arcs.push_back({from, exit, lp + log_nosil, p, i, n});
      } else if (k == n_inst - 1) {
        hmm.arcs.push_back({from, exit, lp, p, i, n});
      } else {
        hmm.arcs.push_back({from, offset[k + 1], lp, p, i, n});
      }
    }
  }
  return hmm;
}

MatrixXd EmissionLogLikelihoods(const OpticalModel &model, const UtteranceHmm &hmm,
                                const MatrixXd &features) {
  if (features.cols() != model.Dim())
    throw ShapeError("feature dimension " + std::to_string(features.cols()) +
                     " does not match model dimension " + std::to_string(model.Dim()));
  MatrixXd e(features.rows(), hmm.NumStates());
  std::vector<int> done(model.NumEmittingStates(), -1);
  for (int s = 0; s < hmm.NumStates(); ++s) {
    const int g = hmm.states[s].global;
    if (done[g] >= 0) {
      e.col(s) = e.col(done[g]);
      continue;
    }
    const MatrixXd c = ComponentMatrix(model.Gmm(g), features);
    for (Eigen::Index t = 0; t < c.rows(); ++t) e(t, s) = LogSumRow(c.row(t));
    done[g] = s;
  }
  return e;
}

MatrixXd StateLogLikelihoods(const OpticalModel &model, const MatrixXd &features) {
  if (features.cols() != model.Dim())
    throw ShapeError("feature dimension " + std::to_string(features.cols()) +
                     " does not match model dimension " + std::to_string(model.Dim()));
  MatrixXd out(features.rows(), model.NumEmittingStates());
  for (int g = 0; g < model.NumEmittingStates(); ++g) {
    const MatrixXd c = ComponentMatrix(model.Gmm(g), features);
    for (Eigen::Index t = 0; t < c.rows(); ++t) out(t, g) = LogSumRow(c.row(t));
  }
  return out;
}

namespace {

struct Lattice {
  MatrixXd alpha, beta;
  double log_likelihood = kLogZero;
};

Lattice RunForwardBackward(const UtteranceHmm &hmm, const MatrixXd &e) {
  const Eigen::Index T = e.rows();
  const int S = hmm.NumStates();
  Lattice lat;
  lat.alpha = MatrixXd::Constant(T, S, kLogZero);
  lat.beta = MatrixXd::Constant(T, S, kLogZero);
  if (T == 0) return lat;
  for (const auto &[s, lp] : hmm.entries) lat.alpha(0, s) = LogAdd(lat.alpha(0, s), lp + e(0, s));
  for (Eigen::Index t = 1; t < T; ++t) {
    for (const auto &a : hmm.arcs) {
      if (a.to == S) continue;
      const double prev = lat.alpha(t - 1, a.from);
      if (prev == kLogZero) continue;
      lat.alpha(t, a.to) = LogAdd(lat.alpha(t, a.to), prev + a.log_prob);
    }
    lat.alpha.row(t) += e.row(t);
  }
  for (const auto &a : hmm.arcs) {
    if (a.to != S) continue;
    lat.beta(T - 1, a.from) = LogAdd(lat.beta(T - 1, a.from), a.log_prob);
    lat.log_likelihood = LogAdd(lat.log_likelihood, lat.alpha(T - 1, a.from) + a.log_prob);
  }
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (const auto &a : hmm.arcs) {
      if (a.to == S) continue;
      const double next = lat.beta(t + 1, a.to);
      if (next == kLogZero) continue;
      lat.beta(t, a.from) = LogAdd(lat.beta(t, a.from), a.log_prob + e(t + 1, a.to) + next);
    }
  }
  return lat;
}

}  // namespace

ForwardBackwardResult ForwardBackward(const UtteranceHmm &hmm, const MatrixXd &emissions) {
  const Lattice lat = RunForwardBackward(hmm, emissions);
  ForwardBackwardResult r;
  r.log_likelihood = lat.log_likelihood;
  if (lat.log_likelihood == kLogZero) {
    r.posteriors = MatrixXd::Zero(emissions.rows(), hmm.NumStates());
    return r;
  }
  r.posteriors = (lat.alpha + lat.beta).array() - lat.log_likelihood;
  r.posteriors = r.posteriors.array().exp();
  return r;
}

Alignment ForcedAlign(const OpticalModel &model, const MatrixXd &features,
                      const std::vector<std::string> &words, const Lexicon &lexicon) {
  const UtteranceHmm hmm = ComposeUtteranceHmm(model, words, lexicon);
  const int T = static_cast<int>(features.rows());
  const int min_frames = hmm.MinFrames();
  if (T < min_frames)
    throw AlignmentInfeasibleError(std::to_string(T) + " frames cannot cover a transcript needing " +
                                   std::to_string(min_frames));
  const MatrixXd e = EmissionLogLikelihoods(model, hmm, features);
  const int S = hmm.NumStates();
  MatrixXd delta = MatrixXd::Constant(T, S, kLogZero);
  Eigen::MatrixXi back = Eigen::MatrixXi::Constant(T, S, -1);
  for (const auto &[s, lp] : hmm.entries) delta(0, s) = lp + e(0, s);
  // Arcs are ordered by source, so a strict comparison keeps the lowest
  // predecessor index on ties.
  for (int t = 1; t < T; ++t) {
    for (const auto &a : hmm.arcs) {
      if (a.to == S || delta(t - 1, a.from) == kLogZero) continue;
      const double cand = delta(t - 1, a.from) + a.log_prob;
      if (cand > delta(t, a.to)) {
        delta(t, a.to) = cand;
        back(t, a.to) = a.from;
      }
    }
    delta.row(t) += e.row(t);
  }
  int best_state = -1;
  double best = kLogZero;
  for (const auto &a : hmm.arcs) {
    if (a.to != S) continue;
    const double cand = delta(T - 1, a.from) + a.log_prob;
    if (cand > best || (cand == best && best_state >= 0 && a.from < best_state)) {
      best = cand;
      best_state = a.from;
    }
  }
  if (best_state < 0 || best == kLogZero)
    throw AlignmentInfeasibleError("no path through the utterance model");
  Alignment al;
  al.log_likelihood = best;
  al.frames.resize(T);
  int s = best_state;
  for (int t = T - 1; t >= 0; --t) {
    al.frames[t] = {hmm.states[s].phone, hmm.states[s].state, hmm.states[s].instance};
    s = back(t, s);
  }
  return al;
}

std::vector<PhoneSegment> SegmentAlignment(const Alignment &alignment) {
  std::vector<PhoneSegment> out;
  for (int t = 0; t < static_cast<int>(alignment.frames.size()); ++t) {
    if (t == 0 || alignment.frames[t].instance != alignment.frames[t - 1].instance)
      out.push_back({alignment.frames[t].phone, t, t + 1});
    else
      out.back().end = t + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

DiagGmm SplitToCount(const DiagGmm &g, int target) {
  VectorXd w = g.weights();
  MatrixXd mu = g.means(), var = g.variances();
  while (w.size() < target) {
    Eigen::Index c = 0;
    for (Eigen::Index m = 1; m < w.size(); ++m)
      if (w[m] > w[c]) c = m;
    const Eigen::Index M = w.size();
    const Eigen::RowVectorXd step = 0.1 * var.row(c).cwiseSqrt();
    w.conservativeResize(M + 1);
    mu.conservativeResize(M + 1, Eigen::NoChange);
    var.conservativeResize(M + 1, Eigen::NoChange);
    w[c] *= 0.5;
    w[M] = w[c];
    mu.row(M) = mu.row(c) - step;
    mu.row(c) += step;
    var.row(M) = var.row(c);
  }
  return DiagGmm(w, mu, var);
}

namespace {

struct Accumulator {
  std::vector<VectorXd> occ;  // per emitting state, per component
  std::vector<MatrixXd> sx, sxx;
  std::vector<MatrixXd> trans;  // per phone
  double log_likelihood = 0.0;

  explicit Accumulator(const OpticalModel &model) {
    const int G = model.NumEmittingStates();
    occ.resize(G);
    sx.resize(G);
    sxx.resize(G);
    for (int g = 0; g < G; ++g) {
      const int M = model.Gmm(g).NumComponents();
      occ[g] = VectorXd::Zero(M);
      sx[g] = MatrixXd::Zero(M, model.Dim());
      sxx[g] = MatrixXd::Zero(M, model.Dim());
    }
    for (int p = 0; p < model.NumPhones(); ++p)
      trans.push_back(MatrixXd::Zero(model.phone(p).topology.NumStates(),
                                     model.phone(p).topology.NumStates() + 1));
  }

  void Merge(const Accumulator &o) {
    for (size_t g = 0; g < occ.size(); ++g) {
      occ[g] += o.occ[g];
      sx[g] += o.sx[g];
      sxx[g] += o.sxx[g];
    }
    for (size_t p = 0; p < trans.size(); ++p) trans[p] += o.trans[p];
    log_likelihood += o.log_likelihood;
  }
};

void AccumulateUtterance(const OpticalModel &model, const UtteranceHmm &hmm, const MatrixXd &x,
                         Accumulator *acc) {
  const Eigen::Index T = x.rows();
  const int S = hmm.NumStates();
  // Component scores per distinct emitting state.
  std::vector<int> slot(model.NumEmittingStates(), -1);
  std::vector<int> globals;
  std::vector<MatrixXd> comps;
  MatrixXd e(T, S);
  for (int s = 0; s < S; ++s) {
    const int g = hmm.states[s].global;
    if (slot[g] < 0) {
      slot[g] = static_cast<int>(globals.size());
      globals.push_back(g);
      comps.push_back(ComponentMatrix(model.Gmm(g), x));
    }
    const MatrixXd &c = comps[slot[g]];
    for (Eigen::Index t = 0; t < T; ++t) e(t, s) = LogSumRow(c.row(t));
  }
  const Lattice lat = RunForwardBackward(hmm, e);
  const double ll = lat.log_likelihood;
  acc->log_likelihood += ll;

  // Occupancy of each distinct emitting state's components: T x M.
  std::vector<MatrixXd> resp(globals.size());
  for (size_t k = 0; k < globals.size(); ++k) resp[k] = MatrixXd::Zero(T, comps[k].cols());
  for (int s = 0; s < S; ++s) {
    const int k = slot[hmm.states[s].global];
    for (Eigen::Index t = 0; t < T; ++t) {
      const double lg = lat.alpha(t, s) + lat.beta(t, s) - ll;
      if (lg == kLogZero) continue;
      resp[k].row(t) += ((comps[k].row(t).array() - e(t, s) + lg).exp()).matrix();
    }
  }
  const MatrixXd x2 = x.array().square();
  for (size_t k = 0; k < globals.size(); ++k) {
    const int g = globals[k];
    acc->occ[g] += resp[k].colwise().sum().transpose();
    acc->sx[g].noalias() += resp[k].transpose() * x;
    acc->sxx[g].noalias() += resp[k].transpose() * x2;
  }

  for (const auto &a : hmm.arcs) {
    if (a.phone < 0) continue;
    double xi = 0.0;
    if (a.to == S) {
      xi = std::exp(lat.alpha(T - 1, a.from) + a.log_prob - ll);
    } else {
      for (Eigen::Index t = 0; t + 1 < T; ++t) {
        const double l = lat.alpha(t, a.from) + a.log_prob + e(t + 1, a.to) +
                         lat.beta(t + 1, a.to) - ll;
        if (l > kLogZero) xi += std::exp(l);
      }
    }
    acc->trans[a.phone](a.phone_from, a.phone_to) += xi;
  }
}

void MaximizationStep(OpticalModel &model, const Accumulator &acc) {
  constexpr double kMinOcc = 1e-10;
  const VectorXd &floor = model.variance_floor();
  int unseen = 0;
  for (int p = 0; p < model.NumPhones(); ++p) {
    PhoneModel &pm = model.phone(p);
    for (int s = 0; s < pm.topology.NumStates(); ++s) {
      const int g = model.StateOffset(p) + s;
      const VectorXd &occ = acc.occ[g];
      if (occ.sum() < kMinOcc) {
        ++unseen;
        continue;
      }
      std::vector<Eigen::Index> keep;
      for (Eigen::Index m = 0; m < occ.size(); ++m) {
        if (occ[m] >= kMinOcc)
          keep.push_back(m);
        else
          LogWarning("dropping zero-occupancy component " + std::to_string(m) + " of " +
                     pm.name + " state " + std::to_string(s));
      }
      const Eigen::Index M = static_cast<Eigen::Index>(keep.size());
      VectorXd w(M);
      MatrixXd mu(M, model.Dim()), var(M, model.Dim());
      double total = 0.0;
      for (Eigen::Index m : keep) total += occ[m];
      for (Eigen::Index i = 0; i < M; ++i) {
        const Eigen::Index m = keep[i];
        w[i] = occ[m] / total;
        mu.row(i) = acc.sx[g].row(m) / occ[m];
        var.row(i) = (acc.sxx[g].row(m) / occ[m]).array() - mu.row(i).array().square();
        var.row(i) = var.row(i).cwiseMax(floor.transpose());
      }
      w /= w.sum();
      pm.states[s] = DiagGmm(w, mu, var);
    }
    MatrixXd &t = pm.topology.transitions;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      double total = 0.0;
      for (Eigen::Index j = 0; j < t.cols(); ++j)
        if (t(i, j) > 0.0) total += acc.trans[p](i, j);
      if (!(total > 0.0)) continue;
      for (Eigen::Index j = 0; j < t.cols(); ++j)
        if (t(i, j) > 0.0) t(i, j) = std::max(acc.trans[p](i, j) / total, 1e-300);
      t.row(i) /= t.row(i).sum();
    }
  }
  if (unseen > 0)
    LogInfo(std::to_string(unseen) + " emitting state(s) unseen in training kept their parameters");
}

}  // namespace

TrainResult TrainEm(OpticalModel &model, const std::vector<FeatureSequence> &features,
                    const std::vector<std::vector<std::string>> &transcripts,
                    const Lexicon &lexicon, const TrainOptions &options) {
  if (features.size() != transcripts.size())
    throw ShapeError("feature and transcript counts differ");
  if (features.empty()) throw InsufficientDataError("no training utterances");
  const auto &sched = options.mixture_schedule;
  if (sched.empty()) throw ConfigError("empty mixture schedule");
  for (size_t i = 0; i < sched.size(); ++i)
    if (sched[i] < 1 || (i > 0 && sched[i] < sched[i - 1]))
      throw ConfigError("mixture schedule must be positive and non-decreasing");
  CheckTranscripts(transcripts, lexicon);
  model.CheckLexicon(lexicon);

  TrainResult result;
  std::vector<size_t> usable;
  for (size_t u = 0; u < features.size(); ++u) {
    if (features[u].Dim() != model.Dim())
      throw ShapeError("utterance " + features[u].utterance_id + " has dimension " +
                       std::to_string(features[u].Dim()) + ", model expects " +
                       std::to_string(model.Dim()));
    const int need = ComposeUtteranceHmm(model, transcripts[u], lexicon).MinFrames();
    if (features[u].NumFrames() < need) {
      LogWarning("skipping " + features[u].utterance_id + ": " +
                 std::to_string(features[u].NumFrames()) + " frames, transcript needs " +
                 std::to_string(need));
      ++result.utterances_skipped;
      continue;
    }
    usable.push_back(u);
  }
  if (usable.empty()) throw InsufficientDataError("no utterance long enough to train on");
  result.utterances_used = static_cast<int>(usable.size());

  // Fixed partition of the utterances; merge order does not depend on jobs.
  const size_t n_blocks = std::min<size_t>(usable.size(), 16);
  for (size_t it = 0; it < sched.size(); ++it) {
    for (int p = 0; p < model.NumPhones(); ++p)
      for (auto &g : model.phone(p).states)
        if (g.NumComponents() < sched[it]) g = SplitToCount(g, sched[it]);

    std::vector<Accumulator> blocks(n_blocks, Accumulator(model));
    ParallelFor(
        n_blocks,
        [&](size_t b) {
          for (size_t i = b; i < usable.size(); i += n_blocks) {
            const size_t u = usable[i];
            const UtteranceHmm hmm = ComposeUtteranceHmm(model, transcripts[u], lexicon);
            AccumulateUtterance(model, hmm, features[u].frames, &blocks[b]);
          }
        },
        options.jobs);
    Accumulator total(model);
    for (const auto &b : blocks) total.Merge(b);
    if (!std::isfinite(total.log_likelihood))
      throw TrainingDivergedError("EM log-likelihood is not finite in iteration " +
                                  std::to_string(it + 1));
    MaximizationStep(model, total);
    result.log_likelihoods.push_back(total.log_likelihood);
    result.mixtures.push_back(sched[it]);
    LogInfo("EM iteration " + std::to_string(it + 1) + " M=" + std::to_string(sched[it]) +
            " log-likelihood " + std::to_string(total.log_likelihood));
  }
  return result;
}

}  // namespace vsr

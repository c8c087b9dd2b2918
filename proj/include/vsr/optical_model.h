// include/vsr/optical_model.h

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

#ifndef VSR_OPTICAL_MODEL_H_
#define VSR_OPTICAL_MODEL_H_

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vsr/features.h"
#include "vsr/lingware.h"
#include "vsr/util.h"

namespace vsr {

inline constexpr const char *kSilencePhone = "sil";

enum class TopologyKind { kClassic3 = 0, kSkip2 = 1, kCustom = 2 };

std::string TopologyName(TopologyKind kind);
TopologyKind ParseTopology(const std::string &name);  // classic3 | skip2

// Left-to-right HMM. Emitting states 0..n-1 (entered at state 0); column n
// of the transition matrix is the final (exit) state. Zero entries are
// disallowed arcs and stay zero under training.
struct HmmTopology {
  TopologyKind kind = TopologyKind::kCustom;
  Eigen::MatrixXd transitions;  // n x (n + 1)

  int NumStates() const { return static_cast<int>(transitions.rows()); }
  bool Allowed(int from, int to) const { return transitions(from, to) > 0.0; }
  // Fewest frames on any path from entry to exit.
  int MinFrames() const;
  int NumArcs() const;

  // classic3: 0->0, 0->1, 1->1, 1->2, 2->2, 2->F.
  // skip2:    0->0, 0->1, 0->F, 1->1, 1->F.
  // Outgoing arcs of each state start uniform.
  static HmmTopology Build(TopologyKind kind);
  // Validates left-to-right structure, row sums and reachability of the exit.
  static HmmTopology Custom(const Eigen::MatrixXd &transitions);
};

// Diagonal-covariance Gaussian mixture.
class DiagGmm {
 public:
  DiagGmm() = default;
  DiagGmm(Eigen::VectorXd weights, Eigen::MatrixXd means, Eigen::MatrixXd variances);

  int NumComponents() const { return static_cast<int>(weights_.size()); }
  int Dim() const { return static_cast<int>(means_.cols()); }
  const Eigen::VectorXd &weights() const { return weights_; }
  const Eigen::MatrixXd &means() const { return means_; }        // M x D
  const Eigen::MatrixXd &variances() const { return variances_; }  // M x D

  // log sum_m w_m N(x; mu_m, diag(var_m))
  double LogLikelihood(const Eigen::Ref<const Eigen::VectorXd> &x) const;
  // Per-component log(w_m N_m(x)).
  void ComponentLogLikelihoods(const Eigen::Ref<const Eigen::VectorXd> &x,
                               Eigen::VectorXd *out) const;

 private:
  void ComputeGconsts();

  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;
  Eigen::MatrixXd variances_;
  Eigen::MatrixXd inv_vars_;
  Eigen::VectorXd gconsts_;
};

struct PhoneModel {
  std::string name;
  HmmTopology topology;
  std::vector<DiagGmm> states;
};

// One monophone HMM per phoneme plus the optional boundary silence.
class OpticalModel {
 public:
  int Dim() const { return dim_; }
  int NumPhones() const { return static_cast<int>(phones_.size()); }
  const PhoneModel &phone(int i) const { return phones_[i]; }
  PhoneModel &phone(int i) { return phones_[i]; }
  // -1 when absent.
  int PhoneIndex(const std::string &name) const;

  bool use_silence() const { return use_silence_; }
  int SilenceIndex() const { return use_silence_ ? PhoneIndex(kSilencePhone) : -1; }
  // Fixed probability of taking the optional silence at each utterance edge.
  double silence_prob() const { return silence_prob_; }
  const Eigen::VectorXd &variance_floor() const { return variance_floor_; }

  // Emitting states are numbered phone by phone.
  int NumEmittingStates() const { return static_cast<int>(state_phone_.size()); }
  int StateOffset(int phone) const { return state_offset_[phone]; }
  const DiagGmm &Gmm(int global_state) const;

  // Throws LexiconError if a lexicon phoneme has no model.
  void CheckLexicon(const Lexicon &lexicon) const;

  // "OPT1": u32 D, u32 phone count, per phone: string name, then u8 use_sil,
  // f64 silence prob, f64 floor[D], then per phone: u8 topology kind,
  // u32 n, f64 transitions[n][n+1], f64 initial[n], and per state: u32 M,
  // f64 weights[M], means[M][D], variances[M][D].
  void Save(const std::filesystem::path &path) const;
  static OpticalModel Load(const std::filesystem::path &path);

 private:
  friend OpticalModel MakeOpticalModel(int, std::vector<PhoneModel>, bool, double,
                                       Eigen::VectorXd);
  void Index();

  int dim_ = 0;
  std::vector<PhoneModel> phones_;
  std::map<std::string, int> phone_index_;
  bool use_silence_ = true;
  double silence_prob_ = 0.5;
  Eigen::VectorXd variance_floor_;
  std::vector<int> state_offset_;
  std::vector<int> state_phone_;
};

// Assembles a model from parts (tests, loaders).
OpticalModel MakeOpticalModel(int dim, std::vector<PhoneModel> phones, bool use_silence,
                              double silence_prob, Eigen::VectorXd variance_floor);

struct FlatStartOptions {
  TopologyKind topology = TopologyKind::kSkip2;
  std::vector<std::string> inventory = SpanishPhonemeInventory();
  bool use_silence = true;
  double variance_floor_factor = 1e-3;
};

// Every state of every phone gets one Gaussian with the global mean and
// (population) variance of all training frames. The floor is
// max(factor * global variance, 1e-6) per dimension.
OpticalModel FlatStart(const std::vector<FeatureSequence> &features,
                       const std::vector<std::vector<std::string>> &transcripts,
                       const Lexicon &lexicon, const FlatStartOptions &options = {});

// Composed left-to-right utterance HMM: optional silence, the phones of the
// first pronunciation of each word, optional silence.
struct UtteranceHmm {
  struct State {
    int phone = 0;
    int state = 0;    // within the phone
    int global = 0;   // OpticalModel emitting state index
    int instance = 0; // phone position in the utterance
  };
  struct Arc {
    int from = 0;
    int to = 0;       // composed state, or NumStates() for the exit
    double log_prob = 0.0;
    int phone = -1;   // phone-level arc credited in training, -1 for none
    int phone_from = 0;
    int phone_to = 0;
  };
  std::vector<State> states;
  std::vector<Arc> arcs;                            // time-advancing and exit arcs
  std::vector<std::pair<int, double>> entries;      // (state, log prob) at t = 0

  int NumStates() const { return static_cast<int>(states.size()); }
  int MinFrames() const;
};

UtteranceHmm ComposeUtteranceHmm(const OpticalModel &model, const std::vector<std::string> &words,
                                 const Lexicon &lexicon);

// T x S matrix of per-frame emission log-likelihoods for the composed states.
Eigen::MatrixXd EmissionLogLikelihoods(const OpticalModel &model, const UtteranceHmm &hmm,
                                       const Eigen::MatrixXd &features);

// T x NumEmittingStates() log-likelihoods of every emitting state.
Eigen::MatrixXd StateLogLikelihoods(const OpticalModel &model, const Eigen::MatrixXd &features);

struct ForwardBackwardResult {
  double log_likelihood = kLogZero;
  Eigen::MatrixXd posteriors;  // T x S
};
ForwardBackwardResult ForwardBackward(const UtteranceHmm &hmm, const Eigen::MatrixXd &emissions);

struct StateLabel {
  int phone = 0;
  int state = 0;
  int instance = 0;  // position of the phone in the composed utterance
};
struct Alignment {
  std::vector<StateLabel> frames;
  double log_likelihood = kLogZero;  // of the best path
};

// Viterbi path through the composed HMM; ties go to the lower state index.
// Throws AlignmentInfeasibleError when T is below the minimum occupancy.
Alignment ForcedAlign(const OpticalModel &model, const Eigen::MatrixXd &features,
                      const std::vector<std::string> &words, const Lexicon &lexicon);

// Phone segments of an alignment: (phone, first frame, one past last frame).
struct PhoneSegment {
  int phone = 0;
  int begin = 0;
  int end = 0;
};
std::vector<PhoneSegment> SegmentAlignment(const Alignment &alignment);

struct TrainOptions {
  // Mixture count per EM iteration; non-decreasing.
  std::vector<int> mixture_schedule = {1, 1, 1, 1, 2, 2, 2, 2, 4, 4, 4, 4, 8, 8, 8, 8};
  unsigned jobs = 0;
};

struct TrainResult {
  std::vector<double> log_likelihoods;  // E-step total per iteration
  std::vector<int> mixtures;            // schedule entry of each iteration
  int utterances_used = 0;
  int utterances_skipped = 0;
};

// Embedded Baum-Welch over the utterance transcripts. Utterances shorter than
// their composed minimum occupancy are skipped with a warning.
TrainResult TrainEm(OpticalModel &model, const std::vector<FeatureSequence> &features,
                    const std::vector<std::vector<std::string>> &transcripts,
                    const Lexicon &lexicon, const TrainOptions &options = {});

// Splits the heaviest component of g (mean +- 0.1 stddev, weight halved)
// until it has `target` components.
DiagGmm SplitToCount(const DiagGmm &g, int target);

}  // namespace vsr

#endif  // VSR_OPTICAL_MODEL_H_

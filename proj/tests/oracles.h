// tests/oracles.h

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

#ifndef VSR_TESTS_ORACLES_H_
#define VSR_TESTS_ORACLES_H_

#include <Eigen/Dense>
#include <array>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vsr/decoder.h"
#include "vsr/lingware.h"
#include "vsr/optical_model.h"

// Slow, obviously-correct reference implementations used to check the
// library. None of them shares code with the code under test.
namespace vsr::testing {

// Cyclic Jacobi rotations on a symmetric matrix. Eigenvalues come back in
// descending order, eigenvectors as matching columns.
void JacobiEigen(const Eigen::MatrixXd &sym, Eigen::VectorXd *values, Eigen::MatrixXd *vectors);

// Every (S, I, D) triple reached by some minimum-cost alignment, found by
// plain recursion over all edit scripts.
struct BruteEdit {
  int cost = 0;
  std::set<std::array<int, 3>> optimal;
};
BruteEdit BruteForceEdit(const std::vector<std::string> &ref, const std::vector<std::string> &hyp);

// Enumerates every word sequence of 1..max_words words (no pruning of the
// search itself, only of paths that cannot finish in time), every pronunciation
// choice, optional boundary silences and every state path.
struct ExhaustiveResult {
  double score = kLogZero;
  std::vector<std::string> words;
};
ExhaustiveResult ExhaustiveDecode(const OpticalModel &model, const Lexicon &lexicon,
                                  const BigramLm &lm, const DecodeConfig &config,
                                  const Eigen::MatrixXd &loglikes, int max_words);

// Toy decoding problem: small vocabulary of 1-2 phone words, random GMM-free
// log-likelihood matrix, random bigram LM.
struct ToyDecodeProblem {
  OpticalModel model;
  Lexicon lexicon;
  BigramLm lm;
  Eigen::MatrixXd loglikes;
};
ToyDecodeProblem MakeToyDecodeProblem(std::mt19937_64 &rng, int T, TopologyKind topology,
                                      bool use_silence);

}  // namespace vsr::testing

#endif  // VSR_TESTS_ORACLES_H_

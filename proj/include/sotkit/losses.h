// sotkit/losses.h

// Copyright 2026  The sotkit authors

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

#ifndef SOTKIT_LOSSES_H_
#define SOTKIT_LOSSES_H_

#include <utility>
#include <vector>

#include "sotkit/aed.h"
#include "sotkit/graph.h"
#include "sotkit/mixer.h"

namespace sotkit {

// Sum of per-token cross entropies in nats. chosen_permutation is the
// speaker-to-branch assignment (multi-branch losses) or the serialization
// order (serialized losses); empty when there is nothing to choose.
// node is the 1x1 graph node of the loss when built on a caller's graph.
struct LossResult {
  double value = 0.0;
  std::vector<int> chosen_permutation;
  std::vector<double> per_token_losses;
  int node = -1;
};

// Special token ids the losses need to build serializations.
struct SpecialIds {
  int sc = -1;
  int eos = -1;
};

// Plain cross entropy over explicit output distributions; the reference must
// end with eos_id and match the number of distributions.
LossResult CeLoss(const std::vector<Eigen::VectorXd>& dists,
                  const std::vector<int>& reference, int eos_id);

// ---- Graph-building losses (share one encoder pass; trainer runs
//      Backward on the returned node) ----

// Teacher-forced CE against one reference sequence that already ends with
// <eos> (serialized or single-speaker).
LossResult CeLossGraph(AedModel* model, Graph* g,
                       const AedModel::EncoderOutput& enc,
                       const std::vector<int>& reference);

// Multi-branch loss minimized over all speaker permutations. references are
// raw per-speaker token ids (no specials); each is terminated with its own
// <eos>. The S x S cost matrix (entry [ref][branch]) is built from S^2
// teacher-forced runs; gradient flows only through the winning assignment.
LossResult PitLossBruteforce(AedModel* model, Graph* g,
                             const std::vector<AedModel::EncoderOutput>& branches,
                             const std::vector<std::vector<int>>& references,
                             SpecialIds ids,
                             int factorial_cap = kDefaultFactorialCap);

// Same semantics solved with the O(S^3) assignment algorithm.
LossResult PitLossHungarian(AedModel* model, Graph* g,
                            const std::vector<AedModel::EncoderOutput>& branches,
                            const std::vector<std::vector<int>>& references,
                            SpecialIds ids);

// Assignment over an explicit cost matrix: minimal total cost and the
// column chosen for each row.
std::pair<double, std::vector<int>> PitAssignHungarian(const Mat& cost);

// Serialized loss minimized over all S! concatenation orders of the source
// blocks (raw token ids, no specials).
LossResult SotMinpermLoss(AedModel* model, Graph* g,
                          const AedModel::EncoderOutput& enc,
                          const std::vector<std::vector<int>>& sources,
                          SpecialIds ids,
                          int factorial_cap = kDefaultFactorialCap);

// Serialized loss against the first-in-first-out serialization (already
// serialized ids including <sc> and final <eos>); one forward pass.
LossResult SotFifoLoss(AedModel* model, Graph* g,
                       const AedModel::EncoderOutput& enc,
                       const std::vector<int>& serialized, SpecialIds ids);

// ---- Value-level conveniences over raw features (internal graph) ----

LossResult PitLossBruteforce(AedModel* model, const Mat& features,
                             const std::vector<std::vector<int>>& references,
                             SpecialIds ids,
                             int factorial_cap = kDefaultFactorialCap);
LossResult PitLossHungarian(AedModel* model, const Mat& features,
                            const std::vector<std::vector<int>>& references,
                            SpecialIds ids);
LossResult SotMinpermLoss(AedModel* model, const Mat& features,
                          const std::vector<std::vector<int>>& sources,
                          SpecialIds ids,
                          int factorial_cap = kDefaultFactorialCap);
LossResult SotFifoLoss(AedModel* model, const Mat& features,
                       const std::vector<int>& serialized, SpecialIds ids);

// Serialized token ids for the given block order: blocks joined by <sc>,
// terminated by <eos>.
std::vector<int> SerializeIds(const std::vector<std::vector<int>>& blocks,
                              const std::vector<int>& order, SpecialIds ids);

}  // namespace sotkit

#endif  // SOTKIT_LOSSES_H_

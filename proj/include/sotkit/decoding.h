// sotkit/decoding.h

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

#ifndef SOTKIT_DECODING_H_
#define SOTKIT_DECODING_H_

#include <vector>

#include "sotkit/aed.h"

namespace sotkit {

struct Hypothesis {
  std::vector<int> tokens;  // ends with <eos> unless truncated
  double score = 0.0;       // total log probability, no length normalization
  bool truncated = false;
  std::vector<std::vector<int>> transcripts;  // split at <sc>, <eos> dropped
  int num_speakers = 0;                       // #<sc> + 1
};

// Length-unnormalized beam search over one output branch. A path completes
// when <eos> is emitted; returns the best complete path, else the best path
// truncated at max_len (flagged). max_len <= 0 selects 2*T' + 10.
Hypothesis BeamSearch(AedModel* model, const Mat& features, int beam,
                      int max_len = 0, int branch = 0);

// Independent per-branch beam search for multi-branch models. Each branch
// yields one single-speaker hypothesis.
std::vector<Hypothesis> BeamSearchBranches(AedModel* model, const Mat& features,
                                           int beam, int max_len = 0);

// Splits at sc_id and drops a final eos_id; empty segments are preserved.
// Throws ContractError on an interior <eos>.
std::vector<std::vector<int>> SplitSpeakers(const std::vector<int>& tokens,
                                            int sc_id, int eos_id);

// #<sc> + 1. Same precondition as SplitSpeakers.
int CountSpeakers(const std::vector<int>& tokens, int sc_id, int eos_id);

}  // namespace sotkit

#endif  // SOTKIT_DECODING_H_

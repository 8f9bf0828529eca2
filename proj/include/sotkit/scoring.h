// sotkit/scoring.h

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

#ifndef SOTKIT_SCORING_H_
#define SOTKIT_SCORING_H_

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "sotkit/mixer.h"

namespace sotkit {

using TokenSeq = std::vector<std::string>;

struct EditCounts {
  long sub = 0;
  long del = 0;
  long ins = 0;
  long Total() const { return sub + del + ins; }
};

// Minimal-cost alignment with unit costs. Among minimal alignments the
// decomposition prefers substitutions (equivalently, maximizes aligned
// pairs), which fixes (S, D, I) uniquely.
EditCounts EditDistance(const TokenSeq& ref, const TokenSeq& hyp);

struct WerReport {
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long reference_token_count = 0;
  double wer = 0.0;
  // chosen_permutation[h] = reference index hypothesis h was scored against.
  std::vector<int> chosen_permutation;
  int padded_empties = 0;

  long TotalErrors() const { return substitutions + deletions + insertions; }
};

// Pads the shorter side with empty token lists, minimizes total errors over
// all permutations of the hypothesis order, and computes WER against the
// unpadded reference token count. use_hungarian solves the assignment in
// O(n^3) instead of enumerating (the enumeration is capped at factorial_cap).
WerReport MultiSpeakerWer(const std::vector<TokenSeq>& refs,
                          const std::vector<TokenSeq>& hyps,
                          int factorial_cap = kDefaultFactorialCap,
                          bool use_hungarian = false);

// Row-normalized speaker-counting confusion matrix; columns are estimated
// counts 1, 2, 3 and an overflow bucket >= 4.
struct CountingMatrix {
  static constexpr int kCols = 4;
  std::vector<std::array<long, kCols>> counts;     // row r: actual = r + 1
  std::vector<std::array<double, kCols>> fractions;
  std::vector<long> row_totals;

  int MaxActual() const { return static_cast<int>(counts.size()); }
};

CountingMatrix CountingAccuracy(const std::vector<std::pair<int, int>>& pairs);

// Aggregation helper for per-speaker-count and total rows.
struct WerAccumulator {
  long sub = 0, del = 0, ins = 0, ref_tokens = 0;
  long mixtures = 0;

  void Add(const WerReport& r) {
    sub += r.substitutions;
    del += r.deletions;
    ins += r.insertions;
    ref_tokens += r.reference_token_count;
    ++mixtures;
  }
  double Wer() const {
    if (ref_tokens == 0) return sub + del + ins == 0 ? 0.0 : 1.0;
    return static_cast<double>(sub + del + ins) / static_cast<double>(ref_tokens);
  }
};

// Aligned text table: WER (%) per actual speaker count plus a total column.
std::string RenderWerTable(
    const std::vector<std::pair<int, WerAccumulator>>& per_speaker_count,
    const WerAccumulator& total);

// Aligned text table in the counting-accuracy layout (rows: actual count,
// columns: estimated 1 / 2 / 3 / >=4, percentages).
std::string RenderCountingTable(const CountingMatrix& matrix);

}  // namespace sotkit

#endif  // SOTKIT_SCORING_H_

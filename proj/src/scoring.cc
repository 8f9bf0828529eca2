// sotkit/scoring.cc

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

#include "sotkit/scoring.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "sotkit/hungarian.h"

namespace sotkit {

EditCounts EditDistance(const TokenSeq& ref, const TokenSeq& hyp) {
  const long n = static_cast<long>(ref.size());
  const long m = static_cast<long>(hyp.size());
  // DP over (cost, -aligned_pairs): minimize cost, then maximize the number
  // of aligned (match or substitution) pairs. The counts follow from the
  // final cell: D = n - k, I = m - k, S = cost - D - I.
  struct Cell {
    long cost;
    long k;
  };
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (long j = 0; j <= m; ++j) prev[j] = {j, 0};
  for (long i = 1; i <= n; ++i) {
    cur[0] = {i, 0};
    for (long j = 1; j <= m; ++j) {
      const long diag_cost = prev[j - 1].cost + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      Cell best = {diag_cost, prev[j - 1].k + 1};
      const Cell del = {prev[j].cost + 1, prev[j].k};
      const Cell ins = {cur[j - 1].cost + 1, cur[j - 1].k};
      for (const Cell& c : {del, ins}) {
        if (c.cost < best.cost || (c.cost == best.cost && c.k > best.k)) best = c;
      }
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  const Cell fin = prev[m];
  EditCounts out;
  out.del = n - fin.k;
  out.ins = m - fin.k;
  out.sub = fin.cost - out.del - out.ins;
  return out;
}

WerReport MultiSpeakerWer(const std::vector<TokenSeq>& refs,
                          const std::vector<TokenSeq>& hyps, int factorial_cap,
                          bool use_hungarian) {
  if (refs.empty()) throw ContractError("MultiSpeakerWer: refs must be nonempty");
  const int n = static_cast<int>(std::max(refs.size(), hyps.size()));
  if (!use_hungarian && n > factorial_cap)
    throw ContractError("MultiSpeakerWer: " + std::to_string(n) +
                        " streams exceed the factorial cap of " +
                        std::to_string(factorial_cap));

  std::vector<TokenSeq> r = refs, h = hyps;
  WerReport report;
  report.padded_empties =
      static_cast<int>((n - r.size()) + (n - h.size()));
  r.resize(n);
  h.resize(n);

  for (const TokenSeq& t : refs)
    report.reference_token_count += static_cast<long>(t.size());

  // Pair costs: empty-vs-ref is all deletions, hyp-vs-empty all insertions.
  std::vector<std::vector<EditCounts>> pair(n, std::vector<EditCounts>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) pair[i][j] = EditDistance(r[i], h[j]);

  std::vector<int> ref_to_hyp(n);
  std::iota(ref_to_hyp.begin(), ref_to_hyp.end(), 0);
  if (use_hungarian) {
    Mat cost(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cost(i, j) = static_cast<double>(pair[i][j].Total());
    ref_to_hyp = SolveAssignment(cost).row_to_col;
  } else {
    std::vector<int> perm = ref_to_hyp;
    long best = std::numeric_limits<long>::max();
    do {
      long total = 0;
      for (int i = 0; i < n; ++i) total += pair[i][perm[i]].Total();
      if (total < best) {
        best = total;
        ref_to_hyp = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  report.chosen_permutation.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    report.chosen_permutation[ref_to_hyp[i]] = i;
    report.substitutions += pair[i][ref_to_hyp[i]].sub;
    report.deletions += pair[i][ref_to_hyp[i]].del;
    report.insertions += pair[i][ref_to_hyp[i]].ins;
  }
  if (report.reference_token_count > 0) {
    report.wer = static_cast<double>(report.TotalErrors()) /
                 static_cast<double>(report.reference_token_count);
  } else {
    report.wer = report.TotalErrors() == 0
                     ? 0.0
                     : std::numeric_limits<double>::infinity();
  }
  return report;
}

CountingMatrix CountingAccuracy(const std::vector<std::pair<int, int>>& pairs) {
  CountingMatrix m;
  for (const auto& [actual, estimated] : pairs) {
    if (actual < 1) throw ContractError("CountingAccuracy: actual count must be >= 1");
    if (estimated < 1)
      throw ContractError("CountingAccuracy: estimated count must be >= 1");
    if (actual > m.MaxActual()) {
      m.counts.resize(actual, {0, 0, 0, 0});
      m.row_totals.resize(actual, 0);
    }
    const int col = std::min(estimated, CountingMatrix::kCols) - 1;
    ++m.counts[actual - 1][col];
    ++m.row_totals[actual - 1];
  }
  m.fractions.assign(m.counts.size(), {0.0, 0.0, 0.0, 0.0});
  for (size_t r = 0; r < m.counts.size(); ++r) {
    if (m.row_totals[r] == 0) continue;
    for (int c = 0; c < CountingMatrix::kCols; ++c)
      m.fractions[r][c] = static_cast<double>(m.counts[r][c]) /
                          static_cast<double>(m.row_totals[r]);
  }
  return m;
}

std::string RenderWerTable(
    const std::vector<std::pair<int, WerAccumulator>>& per_speaker_count,
    const WerAccumulator& total) {
  std::ostringstream os;
  os << "WER (%) by actual number of speakers\n";
  os << "  speakers |";
  for (const auto& [s, acc] : per_speaker_count) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), " %6d |", s);
    os << buf;
  }
  os << "  Total\n";
  os << "  ---------+";
  for (size_t i = 0; i < per_speaker_count.size(); ++i) os << "--------+";
  os << "-------\n";
  os << "  WER      |";
  for (const auto& [s, acc] : per_speaker_count) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), " %6.2f |", 100.0 * acc.Wer());
    os << buf;
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), " %6.2f\n", 100.0 * total.Wer());
  os << buf;
  os << "  errors: " << total.sub << " sub, " << total.del << " del, "
     << total.ins << " ins over " << total.ref_tokens
     << " reference tokens in " << total.mixtures << " mixtures\n";
  return os.str();
}

std::string RenderCountingTable(const CountingMatrix& matrix) {
  std::ostringstream os;
  os << "Speaker counting accuracy (%)\n";
  os << "  actual \\ estimated |      1 |      2 |      3 |    >=4\n";
  os << "  -------------------+--------+--------+--------+-------\n";
  for (int r = 0; r < matrix.MaxActual(); ++r) {
    char head[32];
    std::snprintf(head, sizeof(head), "  %18d |", r + 1);
    os << head;
    for (int c = 0; c < CountingMatrix::kCols; ++c) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), " %6.1f%s", 100.0 * matrix.fractions[r][c],
                    c + 1 == CountingMatrix::kCols ? "\n" : " |");
      os << buf;
    }
  }
  return os.str();
}

}  // namespace sotkit

// sotkit/losses.cc

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

#include "sotkit/losses.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sotkit/hungarian.h"

namespace sotkit {

namespace {

// Per-token CE nodes for one teacher-forced run; total = -sum(picked).
struct CePieces {
  std::vector<int> picked;  // 1x1 nodes of log p(r_n)
  std::vector<double> per_token;
  double total = 0.0;
};

CePieces TeacherForcedCe(AedModel* model, Graph* g,
                         const AedModel::EncoderOutput& enc,
                         const std::vector<int>& reference) {
  CePieces out;
  std::vector<int> logits = model->TeacherForcedLogits(g, enc, reference);
  out.picked.reserve(logits.size());
  for (size_t n = 0; n < logits.size(); ++n) {
    const int lp = g->RowLogSoftmax(logits[n]);
    const int picked = g->PickRows(lp, {reference[n]});
    out.picked.push_back(picked);
    const double tok = -g->Value(picked)(0, 0);
    out.per_token.push_back(tok);
    out.total += tok;
  }
  return out;
}

int NegSum(Graph* g, const std::vector<int>& picked) {
  return g->Scale(g->SumAll(g->ConcatCols(picked)), -1.0);
}

void CheckEndsWithEos(const std::vector<int>& reference, int eos_id,
                      const char* who) {
  if (reference.empty() || reference.back() != eos_id)
    throw ContractError(std::string(who) + ": reference must end with <eos>");
}

std::vector<int> WithEos(const std::vector<int>& tokens, int eos_id) {
  std::vector<int> out = tokens;
  out.push_back(eos_id);
  return out;
}

uint64_t Factorial(int n) {
  uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<uint64_t>(i);
  return f;
}

// Cost matrix from S^2 teacher-forced runs; entry (ref, branch).
struct PairCosts {
  Mat values;
  std::vector<std::vector<CePieces>> pieces;  // [ref][branch]
};

PairCosts BuildPairCosts(AedModel* model, Graph* g,
                         const std::vector<AedModel::EncoderOutput>& branches,
                         const std::vector<std::vector<int>>& references,
                         SpecialIds ids) {
  const int s = static_cast<int>(references.size());
  if (s != static_cast<int>(branches.size()) ||
      s != model->Config().num_branches) {
    throw ConfigError("pit loss: reference count must equal the model branch count");
  }
  PairCosts out;
  out.values.resize(s, s);
  out.pieces.assign(s, std::vector<CePieces>(s));
  for (int r = 0; r < s; ++r) {
    const std::vector<int> ref = WithEos(references[r], ids.eos);
    for (int b = 0; b < s; ++b) {
      out.pieces[r][b] = TeacherForcedCe(model, g, branches[b], ref);
      out.values(r, b) = out.pieces[r][b].total;
    }
  }
  return out;
}

LossResult AssembleAssigned(Graph* g, const PairCosts& costs,
                            const std::vector<int>& ref_to_branch) {
  LossResult res;
  res.chosen_permutation = ref_to_branch;
  std::vector<int> picked;
  for (size_t r = 0; r < ref_to_branch.size(); ++r) {
    const CePieces& p = costs.pieces[r][ref_to_branch[r]];
    picked.insert(picked.end(), p.picked.begin(), p.picked.end());
    res.per_token_losses.insert(res.per_token_losses.end(), p.per_token.begin(),
                                p.per_token.end());
    res.value += p.total;
  }
  res.node = NegSum(g, picked);
  return res;
}

}  // namespace

LossResult CeLoss(const std::vector<Eigen::VectorXd>& dists,
                  const std::vector<int>& reference, int eos_id) {
  if (dists.size() != reference.size())
    throw ContractError("CeLoss: one distribution per reference token required");
  CheckEndsWithEos(reference, eos_id, "CeLoss");
  LossResult res;
  for (size_t n = 0; n < dists.size(); ++n) {
    const int r = reference[n];
    if (r < 0 || r >= dists[n].size())
      throw ContractError("CeLoss: reference token out of distribution range");
    const double tok = -std::log(dists[n](r));
    res.per_token_losses.push_back(tok);
    res.value += tok;
  }
  return res;
}

LossResult CeLossGraph(AedModel* model, Graph* g,
                       const AedModel::EncoderOutput& enc,
                       const std::vector<int>& reference) {
  CePieces p = TeacherForcedCe(model, g, enc, reference);
  LossResult res;
  res.value = p.total;
  res.per_token_losses = std::move(p.per_token);
  res.node = NegSum(g, p.picked);
  return res;
}

LossResult PitLossBruteforce(AedModel* model, Graph* g,
                             const std::vector<AedModel::EncoderOutput>& branches,
                             const std::vector<std::vector<int>>& references,
                             SpecialIds ids, int factorial_cap) {
  const int s = static_cast<int>(references.size());
  if (s > factorial_cap)
    throw ContractError("PitLossBruteforce: speaker count exceeds factorial cap");
  PairCosts costs = BuildPairCosts(model, g, branches, references, ids);
  std::vector<int> perm(s);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {  // lexicographic order makes the tie-break the smallest permutation
    double total = 0.0;
    for (int r = 0; r < s; ++r) total += costs.values(r, perm[r]);
    if (total < best_cost) {
      best_cost = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return AssembleAssigned(g, costs, best);
}

LossResult PitLossHungarian(AedModel* model, Graph* g,
                            const std::vector<AedModel::EncoderOutput>& branches,
                            const std::vector<std::vector<int>>& references,
                            SpecialIds ids) {
  PairCosts costs = BuildPairCosts(model, g, branches, references, ids);
  AssignmentResult assign = SolveAssignment(costs.values);
  return AssembleAssigned(g, costs, assign.row_to_col);
}

std::pair<double, std::vector<int>> PitAssignHungarian(const Mat& cost) {
  AssignmentResult res = SolveAssignment(cost);
  return {res.value, res.row_to_col};
}

std::vector<int> SerializeIds(const std::vector<std::vector<int>>& blocks,
                              const std::vector<int>& order, SpecialIds ids) {
  std::vector<int> out;
  for (size_t i = 0; i < order.size(); ++i) {
    if (i > 0) out.push_back(ids.sc);
    const std::vector<int>& b = blocks[order[i]];
    out.insert(out.end(), b.begin(), b.end());
  }
  out.push_back(ids.eos);
  return out;
}

LossResult SotMinpermLoss(AedModel* model, Graph* g,
                          const AedModel::EncoderOutput& enc,
                          const std::vector<std::vector<int>>& sources,
                          SpecialIds ids, int factorial_cap) {
  const int s = static_cast<int>(sources.size());
  if (s < 1) throw ContractError("SotMinpermLoss: no sources");
  if (s > factorial_cap)
    throw ContractError("SotMinpermLoss: speaker count exceeds factorial cap");
  std::vector<int> perm(s);
  std::iota(perm.begin(), perm.end(), 0);
  LossResult best;
  bool first = true;
  do {
    const std::vector<int> serialized = SerializeIds(sources, perm, ids);
    CePieces p = TeacherForcedCe(model, g, enc, serialized);
    if (first || p.total < best.value) {
      first = false;
      best.value = p.total;
      best.per_token_losses = std::move(p.per_token);
      best.chosen_permutation = perm;
      best.node = NegSum(g, p.picked);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

LossResult SotFifoLoss(AedModel* model, Graph* g,
                       const AedModel::EncoderOutput& enc,
                       const std::vector<int>& serialized, SpecialIds ids) {
  LossResult res = CeLossGraph(model, g, enc, serialized);
  int sc_count = 0;
  for (int id : serialized)
    if (id == ids.sc) ++sc_count;
  res.chosen_permutation.resize(sc_count + 1);
  std::iota(res.chosen_permutation.begin(), res.chosen_permutation.end(), 0);
  return res;
}

namespace {

template <typename Fn>
LossResult WithOwnGraph(AedModel* model, const Mat& features, Fn&& fn) {
  Graph g;
  auto enc = model->EncodeBatch(&g, {&features});
  LossResult res = fn(&g, enc);
  res.node = -1;  // graph is local; the node id would dangle
  return res;
}

}  // namespace

LossResult PitLossBruteforce(AedModel* model, const Mat& features,
                             const std::vector<std::vector<int>>& references,
                             SpecialIds ids, int factorial_cap) {
  return WithOwnGraph(model, features, [&](Graph* g, auto& enc) {
    std::vector<AedModel::EncoderOutput> branches;
    for (auto& b : enc) branches.push_back(b[0]);
    return PitLossBruteforce(model, g, branches, references, ids, factorial_cap);
  });
}

LossResult PitLossHungarian(AedModel* model, const Mat& features,
                            const std::vector<std::vector<int>>& references,
                            SpecialIds ids) {
  return WithOwnGraph(model, features, [&](Graph* g, auto& enc) {
    std::vector<AedModel::EncoderOutput> branches;
    for (auto& b : enc) branches.push_back(b[0]);
    return PitLossHungarian(model, g, branches, references, ids);
  });
}

LossResult SotMinpermLoss(AedModel* model, const Mat& features,
                          const std::vector<std::vector<int>>& sources,
                          SpecialIds ids, int factorial_cap) {
  return WithOwnGraph(model, features, [&](Graph* g, auto& enc) {
    return SotMinpermLoss(model, g, enc[0][0], sources, ids, factorial_cap);
  });
}

LossResult SotFifoLoss(AedModel* model, const Mat& features,
                       const std::vector<int>& serialized, SpecialIds ids) {
  return WithOwnGraph(model, features, [&](Graph* g, auto& enc) {
    return SotFifoLoss(model, g, enc[0][0], serialized, ids);
  });
}

}  // namespace sotkit

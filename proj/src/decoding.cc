// sotkit/decoding.cc

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

#include "sotkit/decoding.h"

#include <algorithm>
#include <limits>

#include "sotkit/common.h"

namespace sotkit {

namespace {

// Token ids follow the Vocab layout: <sc> and <eos> are the last two ids.
struct BeamIds {
  int sc;
  int eos;
};

struct Path {
  std::vector<int> tokens;
  double score = 0.0;
  AedModel::DecoderState state;
};

Hypothesis Finish(const std::vector<int>& tokens, double score, bool truncated,
                  BeamIds ids) {
  Hypothesis h;
  h.tokens = tokens;
  h.score = score;
  h.truncated = truncated;
  h.transcripts = SplitSpeakers(tokens, ids.sc, ids.eos);
  h.num_speakers = CountSpeakers(tokens, ids.sc, ids.eos);
  return h;
}

Hypothesis BeamSearchOnEncoder(AedModel* model, Graph* g,
                               const AedModel::EncoderOutput& enc, int beam,
                               int max_len) {
  if (beam < 1) throw ContractError("BeamSearch: beam must be >= 1");
  if (max_len <= 0) max_len = 2 * enc.frames + 10;
  const int v = model->Config().vocab_size;
  const BeamIds ids{v - 2, v - 1};
  const int keys = model->AttentionKeys(g, enc);

  std::vector<Path> active(1);
  active[0].state = model->InitDecoderState(g, enc.frames);

  bool have_complete = false;
  std::vector<int> best_tokens;
  double best_score = -std::numeric_limits<double>::infinity();

  struct Cand {
    size_t path;
    int token;
    double score;
  };

  for (int step = 0; step < max_len; ++step) {
    std::vector<Cand> cands;
    cands.reserve(active.size() * static_cast<size_t>(v));
    for (size_t pi = 0; pi < active.size(); ++pi) {
      Path& p = active[pi];
      const int prev = p.tokens.empty() ? model->SosId() : p.tokens.back();
      const int logits = model->DecodeStep(g, enc, keys, prev, &p.state);
      const Mat logp = g->Value(g->RowLogSoftmax(logits));
      for (int t = 0; t < v; ++t)
        cands.push_back({pi, t, p.score + logp(0, t)});
    }
    // Completed candidates go to the pool; the rest compete for the beam.
    std::vector<Cand> open;
    open.reserve(cands.size());
    for (const Cand& c : cands) {
      if (c.token == ids.eos) {
        if (c.score > best_score) {
          best_score = c.score;
          best_tokens = active[c.path].tokens;
          best_tokens.push_back(ids.eos);
          have_complete = true;
        }
      } else {
        open.push_back(c);
      }
    }
    std::stable_sort(open.begin(), open.end(),
                     [](const Cand& a, const Cand& b) { return a.score > b.score; });
    if (open.size() > static_cast<size_t>(beam)) open.resize(beam);

    std::vector<Path> next;
    next.reserve(open.size());
    for (const Cand& c : open) {
      Path p;
      p.tokens = active[c.path].tokens;
      p.tokens.push_back(c.token);
      p.score = c.score;
      p.state = active[c.path].state;
      next.push_back(std::move(p));
    }
    active = std::move(next);
    // Scores only decrease with length, so no open path can beat the pool.
    if (active.empty() || (have_complete && active[0].score <= best_score)) break;
  }

  if (have_complete) return Finish(best_tokens, best_score, false, ids);
  if (active.empty())
    throw ContractError("BeamSearch: no active paths and no completed path");
  return Finish(active[0].tokens, active[0].score, true, ids);
}

}  // namespace

Hypothesis BeamSearch(AedModel* model, const Mat& features, int beam,
                      int max_len, int branch) {
  if (branch < 0 || branch >= model->Config().num_branches)
    throw ContractError("BeamSearch: branch out of range");
  Graph g;
  auto enc = model->EncodeBatch(&g, {&features});
  return BeamSearchOnEncoder(model, &g, enc[branch][0], beam, max_len);
}

std::vector<Hypothesis> BeamSearchBranches(AedModel* model, const Mat& features,
                                           int beam, int max_len) {
  Graph g;
  auto enc = model->EncodeBatch(&g, {&features});
  std::vector<Hypothesis> out;
  out.reserve(enc.size());
  for (auto& branch : enc)
    out.push_back(BeamSearchOnEncoder(model, &g, branch[0], beam, max_len));
  return out;
}

std::vector<std::vector<int>> SplitSpeakers(const std::vector<int>& tokens,
                                            int sc_id, int eos_id) {
  std::vector<std::vector<int>> out(1);
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == eos_id) {
      if (i + 1 != tokens.size())
        throw ContractError("SplitSpeakers: interior <eos>");
      break;
    }
    if (tokens[i] == sc_id) {
      out.emplace_back();
    } else {
      out.back().push_back(tokens[i]);
    }
  }
  return out;
}

int CountSpeakers(const std::vector<int>& tokens, int sc_id, int eos_id) {
  int count = 1;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == eos_id && i + 1 != tokens.size())
      throw ContractError("CountSpeakers: interior <eos>");
    if (tokens[i] == sc_id) ++count;
  }
  return count;
}

}  // namespace sotkit

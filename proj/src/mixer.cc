// sotkit/mixer.cc

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

#include "sotkit/mixer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "sotkit/frontend.h"
#include "sotkit/vocab.h"

namespace sotkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kPlanRetryBudget = 1000;

// Margin of mel bins skipped at both filterbank edges when assigning tone
// frequencies; edge filters are narrow and close to fmin/fmax.
constexpr int kMelEdgeMargin = 6;

uint64_t Factorial(int n) {
  uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<uint64_t>(i);
  return f;
}

// Unranks the r-th permutation of {0..n-1} in lexicographic order.
std::vector<int> UnrankPermutation(int n, uint64_t r) {
  std::vector<int> items(n);
  std::iota(items.begin(), items.end(), 0);
  std::vector<int> perm;
  perm.reserve(n);
  for (int i = n; i >= 1; --i) {
    uint64_t f = Factorial(i - 1);
    size_t k = static_cast<size_t>(r / f);
    r %= f;
    perm.push_back(items[k]);
    items.erase(items.begin() + static_cast<long>(k));
  }
  return perm;
}

SerializedReference Concatenate(
    const std::vector<const std::vector<std::string>*>& blocks) {
  SerializedReference out;
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) {
      out.boundaries.push_back(static_cast<int>(out.tokens.size()));
      out.tokens.push_back(kSpeakerChangeSymbol);
    }
    out.tokens.insert(out.tokens.end(), blocks[i]->begin(), blocks[i]->end());
  }
  out.tokens.push_back(kEosSymbol);
  return out;
}

}  // namespace

std::string MixModeName(MixMode mode) {
  return mode == MixMode::kTraining ? "train" : "eval";
}

MixMode ParseMixMode(const std::string& name) {
  if (name == "train" || name == "training") return MixMode::kTraining;
  if (name == "eval" || name == "evaluation") return MixMode::kEvaluation;
  throw ConfigError("unknown mixture mode: " + name);
}

std::vector<std::string> MakeVocabSymbols(int vocab_size) {
  std::vector<std::string> out;
  out.reserve(vocab_size);
  char buf[16];
  for (int i = 0; i < vocab_size; ++i) {
    std::snprintf(buf, sizeof(buf), "t%02d", i);
    out.push_back(buf);
  }
  return out;
}

std::vector<double> TokenFrequencies(int vocab_size, int sample_rate) {
  if (vocab_size < 1) throw ConfigError("TokenFrequencies: vocab_size >= 1 required");
  FrontendConfig fc;
  const double fmax = fc.ResolvedFmax(sample_rate);
  std::vector<double> centers = MelBinCenters(fc.n_mels, fc.fmin, fmax);
  const int lo = kMelEdgeMargin;
  const int hi = fc.n_mels - 1 - kMelEdgeMargin;
  const int usable = hi - lo + 1;
  if (vocab_size > usable) {
    throw ConfigError("TokenFrequencies: vocab_size " + std::to_string(vocab_size) +
                      " exceeds the " + std::to_string(usable) +
                      " distinct mel bins available");
  }
  std::vector<double> freqs(vocab_size);
  if (vocab_size == 1) {
    freqs[0] = centers[(lo + hi) / 2];
    return freqs;
  }
  const double step = static_cast<double>(hi - lo) / (vocab_size - 1);
  for (int k = 0; k < vocab_size; ++k)
    freqs[k] = centers[lo + static_cast<int>(std::lround(k * step))];
  return freqs;
}

std::vector<Utterance> GenerateCorpus(const CorpusConfig& cfg, uint64_t seed) {
  if (cfg.vocab_size < 1) throw ConfigError("GenerateCorpus: vocab_size >= 1 required");
  if (cfg.min_len < 1 || cfg.max_len < cfg.min_len)
    throw ConfigError("GenerateCorpus: need 1 <= min_len <= max_len");
  if (cfg.num_utterances < 0) throw ConfigError("GenerateCorpus: negative count");
  const std::vector<std::string> symbols = MakeVocabSymbols(cfg.vocab_size);
  const std::vector<double> freqs = TokenFrequencies(cfg.vocab_size, cfg.sample_rate);
  const int seg = static_cast<int>(std::lround(cfg.token_duration * cfg.sample_rate));
  if (seg < 1) throw ConfigError("GenerateCorpus: token_duration too short");

  std::vector<Utterance> out;
  out.reserve(cfg.num_utterances);
  char buf[32];
  for (int i = 0; i < cfg.num_utterances; ++i) {
    Rng rng(Rng::Mix(seed, static_cast<uint64_t>(i)));
    Utterance utt;
    std::snprintf(buf, sizeof(buf), "utt%06d", i);
    utt.id = buf;
    std::snprintf(buf, sizeof(buf), "spk%03d",
                  static_cast<int>(rng.UniformInt(cfg.num_speakers)));
    utt.speaker = buf;
    const int len = cfg.min_len +
        static_cast<int>(rng.UniformInt(cfg.max_len - cfg.min_len + 1));
    utt.waveform.sample_rate = cfg.sample_rate;
    utt.waveform.samples.reserve(static_cast<size_t>(len) * seg);
    for (int t = 0; t < len; ++t) {
      const int sym = static_cast<int>(rng.UniformInt(cfg.vocab_size));
      utt.tokens.push_back(symbols[sym]);
      const double w = 2.0 * kPi * freqs[sym] / cfg.sample_rate;
      for (int k = 0; k < seg; ++k)
        utt.waveform.samples.push_back(cfg.amplitude * std::sin(w * k));
    }
    utt.duration = utt.waveform.DurationSec();
    out.push_back(std::move(utt));
  }
  return out;
}

ConstraintCheck CheckPlanConstraints(const MixturePlan& plan,
                                     const std::vector<double>& durations) {
  const size_t s = plan.delays.size();
  if (durations.size() != s)
    throw ContractError("CheckPlanConstraints: durations/delays size mismatch");
  ConstraintCheck res;
  if (s <= 1) return res;  // single source: nothing to check
  if (plan.mode == MixMode::kTraining) {
    for (size_t i = 0; i < s; ++i) {
      for (size_t j = i + 1; j < s; ++j) {
        if (std::abs(plan.delays[i] - plan.delays[j]) < kMinStartGapSec) {
          res.ok = false;
          res.violation = "start-gap";
          return res;
        }
      }
    }
  }
  for (size_t i = 0; i < s; ++i) {
    bool overlapped = false;
    for (size_t j = 0; j < s && !overlapped; ++j) {
      if (j == i) continue;
      overlapped = plan.delays[i] < plan.delays[j] + durations[j] &&
                   plan.delays[j] < plan.delays[i] + durations[i];
    }
    if (!overlapped) {
      res.ok = false;
      res.violation = "overlap";
      return res;
    }
  }
  return res;
}

MixturePlan PlanMixture(const std::vector<Utterance>& pool, int num_speakers,
                        MixMode mode, Rng* rng,
                        const std::optional<std::string>& anchor_id) {
  if (num_speakers < 1) throw ContractError("PlanMixture: num_speakers >= 1 required");
  if (static_cast<int>(pool.size()) < num_speakers)
    throw InputError("PlanMixture: pool smaller than requested speaker count");

  // Pick sources with distinct utterance ids; speakers may repeat.
  std::vector<int> chosen;
  if (anchor_id) {
    for (size_t i = 0; i < pool.size(); ++i)
      if (pool[i].id == *anchor_id) chosen.push_back(static_cast<int>(i));
    if (chosen.empty())
      throw InputError("PlanMixture: anchor id not in pool: " + *anchor_id);
  }
  while (static_cast<int>(chosen.size()) < num_speakers) {
    int cand = static_cast<int>(rng->UniformInt(pool.size()));
    bool dup = false;
    for (int c : chosen) dup = dup || pool[c].id == pool[cand].id;
    if (!dup) chosen.push_back(cand);
  }

  MixturePlan plan;
  plan.mode = mode;
  std::vector<double> durations;
  for (int c : chosen) {
    plan.source_ids.push_back(pool[c].id);
    durations.push_back(pool[c].duration);
  }
  if (num_speakers == 1) {
    plan.delays = {0.0};
    return plan;
  }

  const double longest = *std::max_element(durations.begin(), durations.end());
  const double max_delay = std::max(0.0, longest - kDelayMarginSec);
  std::string last_violation = "overlap";
  for (int attempt = 0; attempt < kPlanRetryBudget; ++attempt) {
    plan.delays.resize(num_speakers);
    for (int s = 0; s < num_speakers; ++s)
      plan.delays[s] = rng->Uniform(0.0, max_delay);
    const double dmin = *std::min_element(plan.delays.begin(), plan.delays.end());
    for (double& d : plan.delays) d -= dmin;
    ConstraintCheck check = CheckPlanConstraints(plan, durations);
    if (check.ok) return plan;
    last_violation = check.violation;
  }
  throw PlanningError("PlanMixture: retry budget exhausted; last violated constraint: " +
                      last_violation);
}

MixtureSample RenderMixture(const MixturePlan& plan,
                            const std::vector<Utterance>& pool, Rng* rng) {
  if (plan.source_ids.empty()) throw ContractError("RenderMixture: empty plan");
  std::map<std::string, const Utterance*> by_id;
  for (const Utterance& u : pool) by_id[u.id] = &u;

  MixtureSample sample;
  sample.num_speakers = static_cast<int>(plan.source_ids.size());
  int sample_rate = -1;
  size_t total_len = 0;
  for (size_t s = 0; s < plan.source_ids.size(); ++s) {
    auto it = by_id.find(plan.source_ids[s]);
    if (it == by_id.end())
      throw InputError("RenderMixture: unresolvable source id: " + plan.source_ids[s]);
    const Utterance* utt = it->second;
    if (sample_rate < 0) sample_rate = utt->waveform.sample_rate;
    if (utt->waveform.sample_rate != sample_rate)
      throw FormatError("RenderMixture: sample-rate mismatch across sources");
    sample.sources.emplace_back(utt, plan.delays[s]);
    const size_t offset =
        static_cast<size_t>(std::llround(plan.delays[s] * sample_rate));
    total_len = std::max(total_len, offset + utt->waveform.samples.size());
  }

  sample.waveform.sample_rate = sample_rate;
  sample.waveform.samples.assign(total_len, 0.0);
  for (const auto& [utt, delay] : sample.sources) {
    const size_t offset = static_cast<size_t>(std::llround(delay * sample_rate));
    for (size_t i = 0; i < utt->waveform.samples.size(); ++i)
      sample.waveform.samples[offset + i] += utt->waveform.samples[i];
  }

  std::vector<std::pair<std::vector<std::string>, double>> blocks;
  for (const auto& [utt, delay] : sample.sources)
    blocks.emplace_back(utt->tokens, delay);
  sample.serialized_reference = SerializeFifo(blocks, rng);
  return sample;
}

SerializedReference SerializeFifo(
    const std::vector<std::pair<std::vector<std::string>, double>>& sources,
    Rng* rng) {
  if (sources.empty()) throw ContractError("SerializeFifo: no sources");
  const size_t n = sources.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return sources[a].second < sources[b].second;
  });
  // One rng draw per group of exactly tied start times: the draw unranks a
  // uniform permutation of the group.
  for (size_t i = 0; i < n;) {
    size_t j = i + 1;
    while (j < n && sources[order[j]].second == sources[order[i]].second) ++j;
    const size_t k = j - i;
    if (k > 1) {
      std::vector<int> perm =
          UnrankPermutation(static_cast<int>(k),
                            rng->UniformInt(Factorial(static_cast<int>(k))));
      std::vector<size_t> group(order.begin() + static_cast<long>(i),
                                order.begin() + static_cast<long>(j));
      for (size_t t = 0; t < k; ++t) order[i + t] = group[perm[t]];
    }
    i = j;
  }
  std::vector<const std::vector<std::string>*> blocks;
  for (size_t idx : order) blocks.push_back(&sources[idx].first);
  return Concatenate(blocks);
}

std::vector<SerializedReference> EnumerateSerializations(
    const std::vector<std::vector<std::string>>& sources, int factorial_cap) {
  const int s = static_cast<int>(sources.size());
  if (s < 1) throw ContractError("EnumerateSerializations: no sources");
  if (s > factorial_cap) {
    throw ContractError("EnumerateSerializations: " + std::to_string(s) +
                        " sources exceed the factorial cap of " +
                        std::to_string(factorial_cap));
  }
  std::vector<int> perm(s);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<SerializedReference> out;
  do {
    std::vector<const std::vector<std::string>*> blocks;
    for (int idx : perm) blocks.push_back(&sources[idx]);
    out.push_back(Concatenate(blocks));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<std::vector<std::string>> SplitSerialized(
    const SerializedReference& ref) {
  std::vector<std::vector<std::string>> out(1);
  for (size_t i = 0; i < ref.tokens.size(); ++i) {
    const std::string& t = ref.tokens[i];
    if (t == kEosSymbol) {
      if (i + 1 != ref.tokens.size())
        throw ContractError("SplitSerialized: interior <eos>");
      break;
    }
    if (t == kSpeakerChangeSymbol) {
      out.emplace_back();
    } else {
      out.back().push_back(t);
    }
  }
  return out;
}

}  // namespace sotkit

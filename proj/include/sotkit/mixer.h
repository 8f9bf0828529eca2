// sotkit/mixer.h

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

#ifndef SOTKIT_MIXER_H_
#define SOTKIT_MIXER_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sotkit/common.h"
#include "sotkit/wav.h"

namespace sotkit {

// Minimum start-time gap between sources in training-mode mixtures.
inline constexpr double kMinStartGapSec = 0.5;
// Delay upper bound is longest source duration minus this margin.
inline constexpr double kDelayMarginSec = 0.25;
// Permutation enumeration guard shared by mixer, losses and scoring.
inline constexpr int kDefaultFactorialCap = 6;

struct Utterance {
  std::string id;
  std::string speaker;
  std::vector<std::string> tokens;
  Waveform waveform;
  double duration = 0.0;  // == samples / sample_rate
};

enum class MixMode { kTraining, kEvaluation };

std::string MixModeName(MixMode mode);
MixMode ParseMixMode(const std::string& name);

struct MixturePlan {
  std::vector<std::string> source_ids;
  std::vector<double> delays;  // seconds, min(delays) == 0
  MixMode mode = MixMode::kTraining;
};

// Token sequence over vocabulary plus <sc>/<eos>; boundaries lists the index
// of each <sc>. Length() is the full serialized length including separators
// and the terminal <eos>.
struct SerializedReference {
  std::vector<std::string> tokens;
  std::vector<int> boundaries;

  int Length() const { return static_cast<int>(tokens.size()); }
};

struct MixtureSample {
  Waveform waveform;
  std::vector<std::pair<const Utterance*, double>> sources;  // (source, delay)
  SerializedReference serialized_reference;
  int num_speakers = 0;
};

struct CorpusConfig {
  int vocab_size = 12;
  int num_utterances = 100;
  int min_len = 3;
  int max_len = 8;
  double token_duration = 0.2;  // seconds per token
  int sample_rate = 16000;
  double amplitude = 0.25;
  int num_speakers = 10;
};

// Symbol names for a tone-word vocabulary: t00, t01, ...
std::vector<std::string> MakeVocabSymbols(int vocab_size);

// Per-token tone frequency, one per vocabulary symbol, spaced over the mel
// filterbank so distinct tokens excite distinct mel bins. Throws ConfigError
// when vocab_size exceeds the number of usable bins.
std::vector<double> TokenFrequencies(int vocab_size, int sample_rate);

// Deterministic synthetic corpus: every token is a fixed-duration pure tone.
std::vector<Utterance> GenerateCorpus(const CorpusConfig& cfg, uint64_t seed);

struct ConstraintCheck {
  bool ok = true;
  std::string violation;  // name of the first violated constraint
};

// Re-validates a plan against the mode's constraints given source durations.
// Training mode: pairwise start gaps >= 0.5 s and every source overlapped.
// Evaluation mode: overlap constraint only.
ConstraintCheck CheckPlanConstraints(const MixturePlan& plan,
                                     const std::vector<double>& durations);

// Picks S distinct-id sources from the pool (keeping `anchor_id` as the first
// source when given) and rejection-samples delays: uniform over
// [0, max(0, longest_duration - 0.25 s)], shifted so the smallest delay is 0.
// Throws PlanningError naming the violated constraint when the retry budget
// (1000) is exhausted.
MixturePlan PlanMixture(const std::vector<Utterance>& pool, int num_speakers,
                        MixMode mode, Rng* rng,
                        const std::optional<std::string>& anchor_id = {});

// Sums the delayed sources sample by sample with no gain change, and builds
// the FIFO serialized reference. rng is consumed only to break exact
// start-time ties in serialization.
MixtureSample RenderMixture(const MixturePlan& plan,
                            const std::vector<Utterance>& pool, Rng* rng);

// Concatenates the token blocks in ascending start-time order with <sc>
// between blocks and a final <eos>. Exact ties are ordered uniformly at
// random, consuming exactly one rng draw per tied group.
SerializedReference SerializeFifo(
    const std::vector<std::pair<std::vector<std::string>, double>>& sources,
    Rng* rng);

// All S! serializations, one per permutation in lexicographic order.
// Throws ContractError when S exceeds the factorial cap.
std::vector<SerializedReference> EnumerateSerializations(
    const std::vector<std::vector<std::string>>& sources,
    int factorial_cap = kDefaultFactorialCap);

// Splits a serialized reference back into per-speaker token blocks.
std::vector<std::vector<std::string>> SplitSerialized(
    const SerializedReference& ref);

}  // namespace sotkit

#endif  // SOTKIT_MIXER_H_

// sotkit/pipeline.h

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

#ifndef SOTKIT_PIPELINE_H_
#define SOTKIT_PIPELINE_H_

#include <map>
#include <string>
#include <vector>

#include "sotkit/aed.h"
#include "sotkit/frontend.h"
#include "sotkit/manifest.h"
#include "sotkit/mixer.h"
#include "sotkit/scoring.h"
#include "sotkit/trainer.h"

namespace sotkit {

// Command implementations shared by the CLI and the integration tests. Every
// run is deterministic given its seed and inputs; per-sample work is seeded
// from (seed, sample_index) so --jobs never changes the outputs.

struct SynthOptions {
  CorpusConfig corpus;
  uint64_t seed = 7;
  std::string out_dir;
  bool force = false;
};

// Writes out_dir/corpus.jsonl and out_dir/wav/*.wav; returns the manifest
// path. Refuses a non-empty out_dir unless force is set.
std::string RunSynth(const SynthOptions& opt);

struct MixOptions {
  std::string corpus_manifest;
  std::vector<int> speaker_counts;  // S drawn uniformly from this list
  MixMode mode = MixMode::kTraining;
  uint64_t seed = 0;
  std::string out_dir;
  bool force = false;
  bool volume_perturb = false;  // random gain in [0.8, 1.25] on the mixture
  int jobs = 1;
};

// One mixture per anchor utterance; writes out_dir/mixtures.jsonl and
// out_dir/wav/*.wav; returns the manifest path.
std::string RunMix(const MixOptions& opt);

struct TrainOptions {
  std::string train_manifest;
  std::string valid_manifest;
  std::string out_dir;
  AedConfig model;  // att_conv_width == 0 resolves from the training data
  TrainConfig train;
  FrontendConfig frontend;
  std::string resume;  // optional checkpoint to continue from
};

struct TrainOutput {
  TrainResult result;
  std::string log_path;
  std::string config_json;  // resolved model + train configuration
  uint64_t config_hash = 0;
};

TrainOutput RunTrain(const TrainOptions& opt);

struct DecodeOptions {
  std::string checkpoint;
  std::string mixture_manifest;
  std::string out_path;  // hypothesis JSONL
  int beam = 4;
  int max_len = 0;  // 0 -> 2*T' + 10
  int jobs = 1;
  FrontendConfig frontend;
};

std::string RunDecode(const DecodeOptions& opt);

struct ScoreOptions {
  std::string mixture_manifest;
  std::string hypothesis_file;
  std::string out_dir;
  int factorial_cap = kDefaultFactorialCap;
  bool use_hungarian = false;
};

struct ScoreOutput {
  WerAccumulator total;
  std::map<int, WerAccumulator> per_speaker_count;  // by actual S
  CountingMatrix counting;
  std::string report_path;   // aligned text tables
  std::string records_path;  // per-mixture JSONL
};

ScoreOutput RunScore(const ScoreOptions& opt);

struct GradCheckOptions {
  std::vector<std::string> kinds;  // empty -> all five
  double eps = 1e-5;
  int min_coords = 200;
  double threshold = 1e-4;
  uint64_t seed = 11;
  bool include_saa = true;  // extra sot_fifo check on an SAA model
};

struct GradCheckOutput {
  std::vector<std::pair<std::string, double>> max_rel_errors;
  bool ok = true;
};

// Runs the finite-difference gradient suite on small models (M <= 8, V <= 6,
// T' <= 5) for each requested loss kind.
GradCheckOutput RunGradCheck(const GradCheckOptions& opt);

// Loads mixtures as training samples: features extracted with cfg, token ids
// encoded with vocab. Used by RunTrain and the tests.
std::vector<TrainSample> LoadTrainSamples(const std::string& mixture_manifest,
                                          const FrontendConfig& cfg,
                                          const Vocab& vocab);

// Sorted unique regular tokens appearing in the manifest's references.
std::vector<std::string> CollectVocabSymbols(
    const std::vector<MixtureRecord>& records);

}  // namespace sotkit

#endif  // SOTKIT_PIPELINE_H_

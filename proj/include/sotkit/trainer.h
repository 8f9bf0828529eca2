// sotkit/trainer.h

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

#ifndef SOTKIT_TRAINER_H_
#define SOTKIT_TRAINER_H_

#include <memory>
#include <string>
#include <vector>

#include "sotkit/aed.h"
#include "sotkit/losses.h"

namespace sotkit {

enum class LossKind {
  kSingle,
  kPitBrute,
  kPitHungarian,
  kSotMinperm,
  kSotFifo,
};

LossKind ParseLossKind(const std::string& name);
std::string LossKindName(LossKind kind);

struct TrainConfig {
  LossKind loss_kind = LossKind::kSotFifo;
  double peak_lr = 2e-4;
  int max_steps = 1000;
  // Schedule shape; zeros scale with max_steps (1%, 50%, 75%).
  int warmup_steps = 0;
  int hold_until = 0;
  int decay_rate_per = 0;
  int frames_per_batch = 2000;
  int eval_every = 0;  // 0 -> max(1, max_steps / 10)
  double clip_norm = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  int factorial_cap = kDefaultFactorialCap;

  int ResolvedWarmup() const {
    return warmup_steps > 0 ? warmup_steps : std::max(1, max_steps / 100);
  }
  int ResolvedHold() const {
    return hold_until > 0 ? hold_until : std::max(ResolvedWarmup(), max_steps / 2);
  }
  int ResolvedDecayPer() const {
    return decay_rate_per > 0 ? decay_rate_per : std::max(1, 3 * max_steps / 4);
  }
  int ResolvedEvalEvery() const {
    return eval_every > 0 ? eval_every : std::max(1, max_steps / 10);
  }
};

// Linear 0 -> peak over warmup, constant to hold_until, then one decade per
// decay_rate_per steps.
double LrSchedule(int step, const TrainConfig& cfg);

// Shuffles sample indices (seeded per epoch) and packs greedily until adding
// a sample would exceed the frame budget.
std::vector<std::vector<int>> MakeBatches(const std::vector<int>& frames,
                                          int frames_per_batch, uint64_t seed,
                                          int epoch);

struct TrainSample {
  std::string id;
  Mat features;                          // T' x D stacked features
  std::vector<int> serialized;           // ids including <sc> and final <eos>
  std::vector<std::vector<int>> blocks;  // per-speaker raw ids, start order
  int frames = 0;
};

struct TrainLogEntry {
  int step = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean per-token loss since the previous entry
  double valid_loss = 0.0;
};

struct TrainResult {
  int best_step = 0;
  double best_valid_loss = 0.0;
  std::vector<TrainLogEntry> log;
  std::string best_checkpoint;
  std::string last_checkpoint;
};

class Trainer {
 public:
  Trainer(AedModel* model, TrainConfig cfg, SpecialIds ids);

  // Full loop: Adam with the schedule, periodic validation, best-validation
  // checkpoint retained. checkpoint_dir may be empty to skip writing.
  // Throws Error naming the step and batch when a loss becomes non-finite.
  TrainResult Train(const std::vector<TrainSample>& train,
                    const std::vector<TrainSample>& valid,
                    const std::string& checkpoint_dir,
                    const std::vector<std::string>& vocab_symbols,
                    uint64_t start_step = 0);

  // One optimizer step on an explicit batch; returns (total loss, tokens).
  std::pair<double, long> Step(const std::vector<const TrainSample*>& batch,
                               int step_number);

  // Forward-only mean per-token loss.
  double EvalLoss(const std::vector<TrainSample>& samples);

 private:
  void ClipAndUpdate(double lr, int adam_step);

  AedModel* model_;
  TrainConfig cfg_;
  SpecialIds ids_;
};

// ---- Checkpoints ----

struct CheckpointMeta {
  AedConfig config;
  std::vector<std::string> vocab_symbols;  // regular symbols only
  uint64_t step = 0;
  std::string rng_state;
  uint64_t config_hash = 0;
  bool has_optimizer = false;
};

// Versioned header with config and vocabulary, then named parameter tensors
// (32-bit floats, creation order), then optional Adam moments. Parameters are
// float32-rounded in memory, so save/load round-trips bit-exactly.
void SaveCheckpoint(const std::string& path, const AedModel& model,
                    const std::vector<std::string>& vocab_symbols,
                    uint64_t step, const std::string& rng_state,
                    bool with_optimizer);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::unique_ptr<AedModel> model;
};

LoadedCheckpoint LoadCheckpoint(const std::string& path);

// ---- Gradient verification ----

// Max relative error between analytic gradients and central finite
// differences over a seeded subset of at least min_coords coordinates
// (or every coordinate when the model is small enough).
double GradCheck(AedModel* model, const TrainSample& sample, LossKind kind,
                 SpecialIds ids, double eps = 1e-5, int min_coords = 200,
                 uint64_t seed = 0);

}  // namespace sotkit

#endif  // SOTKIT_TRAINER_H_

// sotkit/trainer.cc

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

#include "sotkit/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

namespace sotkit {

using nlohmann::json;

LossKind ParseLossKind(const std::string& name) {
  if (name == "single") return LossKind::kSingle;
  if (name == "pit_brute") return LossKind::kPitBrute;
  if (name == "pit_hungarian") return LossKind::kPitHungarian;
  if (name == "sot_minperm") return LossKind::kSotMinperm;
  if (name == "sot_fifo") return LossKind::kSotFifo;
  throw ConfigError("unknown loss kind: " + name);
}

std::string LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kSingle: return "single";
    case LossKind::kPitBrute: return "pit_brute";
    case LossKind::kPitHungarian: return "pit_hungarian";
    case LossKind::kSotMinperm: return "sot_minperm";
    case LossKind::kSotFifo: return "sot_fifo";
  }
  throw ContractError("LossKindName: bad enum");
}

double LrSchedule(int step, const TrainConfig& cfg) {
  if (step < 0) throw ContractError("LrSchedule: step must be >= 0");
  const int warmup = cfg.ResolvedWarmup();
  const int hold = cfg.ResolvedHold();
  const int decay_per = cfg.ResolvedDecayPer();
  if (step <= warmup)
    return cfg.peak_lr * static_cast<double>(step) / warmup;
  if (step <= hold) return cfg.peak_lr;
  return cfg.peak_lr *
         std::pow(10.0, -static_cast<double>(step - hold) / decay_per);
}

std::vector<std::vector<int>> MakeBatches(const std::vector<int>& frames,
                                          int frames_per_batch, uint64_t seed,
                                          int epoch) {
  std::vector<int> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::Mix(seed, 0x6261746368ULL + static_cast<uint64_t>(epoch)));
  rng.Shuffle(&order);
  std::vector<std::vector<int>> batches;
  std::vector<int> cur;
  int cur_frames = 0;
  for (int idx : order) {
    if (frames[idx] > frames_per_batch)
      throw ConfigError("MakeBatches: sample " + std::to_string(idx) + " has " +
                        std::to_string(frames[idx]) +
                        " frames, above the batch budget");
    if (!cur.empty() && cur_frames + frames[idx] > frames_per_batch) {
      batches.push_back(std::move(cur));
      cur.clear();
      cur_frames = 0;
    }
    cur.push_back(idx);
    cur_frames += frames[idx];
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

namespace {

// Builds the configured loss for one batch on g; returns the summed loss
// value and node, counting reference tokens (including separators and <eos>).
struct BatchLossOut {
  double value = 0.0;
  long tokens = 0;
  int node = -1;
};

BatchLossOut BuildBatchLoss(AedModel* model, Graph* g,
                            const std::vector<const TrainSample*>& batch,
                            LossKind kind, SpecialIds ids, int factorial_cap) {
  std::vector<const Mat*> feats;
  feats.reserve(batch.size());
  for (const TrainSample* s : batch) feats.push_back(&s->features);
  auto enc = model->EncodeBatch(g, feats);

  BatchLossOut out;
  std::vector<int> loss_nodes;
  for (size_t i = 0; i < batch.size(); ++i) {
    const TrainSample& s = *batch[i];
    LossResult res;
    switch (kind) {
      case LossKind::kSingle:
        if (s.blocks.size() != 1)
          throw ConfigError("loss 'single' needs single-speaker samples; got " +
                            std::to_string(s.blocks.size()) + " for " + s.id);
        res = CeLossGraph(model, g, enc[0][i], s.serialized);
        break;
      case LossKind::kSotFifo:
        res = SotFifoLoss(model, g, enc[0][i], s.serialized, ids);
        break;
      case LossKind::kSotMinperm:
        res = SotMinpermLoss(model, g, enc[0][i], s.blocks, ids, factorial_cap);
        break;
      case LossKind::kPitBrute:
      case LossKind::kPitHungarian: {
        std::vector<AedModel::EncoderOutput> branches;
        branches.reserve(enc.size());
        for (auto& b : enc) branches.push_back(b[i]);
        res = kind == LossKind::kPitBrute
                  ? PitLossBruteforce(model, g, branches, s.blocks, ids,
                                      factorial_cap)
                  : PitLossHungarian(model, g, branches, s.blocks, ids);
        break;
      }
    }
    loss_nodes.push_back(res.node);
    out.tokens += static_cast<long>(res.per_token_losses.size());
  }
  out.node = g->AddN(loss_nodes);
  out.value = g->Value(out.node)(0, 0);
  return out;
}

double ForwardBatchLoss(AedModel* model,
                        const std::vector<const TrainSample*>& batch,
                        LossKind kind, SpecialIds ids, int factorial_cap,
                        long* tokens_out) {
  Graph g;
  BatchLossOut out = BuildBatchLoss(model, &g, batch, kind, ids, factorial_cap);
  if (tokens_out) *tokens_out = out.tokens;
  return out.value;
}

}  // namespace

Trainer::Trainer(AedModel* model, TrainConfig cfg, SpecialIds ids)
    : model_(model), cfg_(cfg), ids_(ids) {
  const int branches = model_->Config().num_branches;
  const bool pit = cfg_.loss_kind == LossKind::kPitBrute ||
                   cfg_.loss_kind == LossKind::kPitHungarian;
  if (pit && branches < 2)
    throw ConfigError("Trainer: " + LossKindName(cfg_.loss_kind) +
                      " requires a multi-branch model");
  if (!pit && branches != 1)
    throw ConfigError("Trainer: " + LossKindName(cfg_.loss_kind) +
                      " requires a single-branch model");
}

void Trainer::ClipAndUpdate(double lr, int adam_step) {
  ParamStore& params = model_->Params();
  double sq = 0.0;
  for (const NamedTensor& t : params.Tensors()) sq += t.grad.squaredNorm();
  const double norm = std::sqrt(sq);
  const double scale =
      cfg_.clip_norm > 0 && norm > cfg_.clip_norm ? cfg_.clip_norm / norm : 1.0;

  const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, adam_step);
  const double bc2 = 1.0 - std::pow(b2, adam_step);
  for (NamedTensor& t : params.Tensors()) {
    for (long i = 0; i < t.value.size(); ++i) {
      const double gval = t.grad.data()[i] * scale;
      double m = b1 * t.adam_m.data()[i] + (1.0 - b1) * gval;
      double v = b2 * t.adam_v.data()[i] + (1.0 - b2) * gval * gval;
      // Moments and parameters stay exactly float32-representable so that
      // 32-bit checkpoints resume bit-identically.
      m = static_cast<double>(static_cast<float>(m));
      v = static_cast<double>(static_cast<float>(v));
      t.adam_m.data()[i] = m;
      t.adam_v.data()[i] = v;
      const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.adam_eps);
      t.value.data()[i] =
          static_cast<double>(static_cast<float>(t.value.data()[i] - update));
    }
  }
}

std::pair<double, long> Trainer::Step(
    const std::vector<const TrainSample*>& batch, int step_number) {
  model_->Params().ZeroGrad();
  Graph g;
  BatchLossOut out =
      BuildBatchLoss(model_, &g, batch, cfg_.loss_kind, ids_, cfg_.factorial_cap);
  if (!std::isfinite(out.value)) {
    std::string names;
    for (const TrainSample* s : batch) names += s->id + " ";
    throw Error("Trainer: non-finite loss at step " + std::to_string(step_number) +
                " on batch [ " + names + "]");
  }
  g.Backward(out.node);
  ClipAndUpdate(LrSchedule(step_number, cfg_), step_number);
  return {out.value, out.tokens};
}

double Trainer::EvalLoss(const std::vector<TrainSample>& samples) {
  if (samples.empty()) return 0.0;
  // Fixed manifest order, packing only.
  double total = 0.0;
  long tokens = 0;
  std::vector<const TrainSample*> cur;
  int cur_frames = 0;
  auto flush = [&]() {
    if (cur.empty()) return;
    long t = 0;
    total += ForwardBatchLoss(model_, cur, cfg_.loss_kind, ids_,
                              cfg_.factorial_cap, &t);
    tokens += t;
    cur.clear();
    cur_frames = 0;
  };
  for (const TrainSample& s : samples) {
    if (!cur.empty() && cur_frames + s.frames > cfg_.frames_per_batch) flush();
    cur.push_back(&s);
    cur_frames += s.frames;
  }
  flush();
  return tokens > 0 ? total / static_cast<double>(tokens) : 0.0;
}

TrainResult Trainer::Train(const std::vector<TrainSample>& train,
                           const std::vector<TrainSample>& valid,
                           const std::string& checkpoint_dir,
                           const std::vector<std::string>& vocab_symbols,
                           uint64_t start_step) {
  if (train.empty()) throw InputError("Trainer: empty training set");
  std::vector<int> frames;
  frames.reserve(train.size());
  int longest = 0;
  for (const TrainSample& s : train) {
    frames.push_back(s.frames);
    longest = std::max(longest, s.frames);
  }
  if (longest > cfg_.frames_per_batch)
    throw ConfigError("Trainer: frames_per_batch " +
                      std::to_string(cfg_.frames_per_batch) +
                      " below the longest sample (" + std::to_string(longest) + ")");

  TrainResult result;
  result.best_valid_loss = std::numeric_limits<double>::infinity();
  const int eval_every = cfg_.ResolvedEvalEvery();
  namespace fs = std::filesystem;
  const bool save = !checkpoint_dir.empty();
  if (save) fs::create_directories(checkpoint_dir);
  const std::string best_path =
      save ? (fs::path(checkpoint_dir) / "best.ckpt").string() : "";
  const std::string last_path =
      save ? (fs::path(checkpoint_dir) / "last.ckpt").string() : "";

  auto save_best = [&](uint64_t step) {
    if (!save) return;
    SaveCheckpoint(best_path, *model_, vocab_symbols, step,
                   std::to_string(cfg_.seed), /*with_optimizer=*/false);
    result.best_checkpoint = best_path;
  };

  double running_loss = 0.0;
  long running_tokens = 0;
  uint64_t step = 0;
  int epoch = 0;
  if (start_step == 0) {
    const double v0 = EvalLoss(valid);
    result.best_valid_loss = v0;
    result.best_step = 0;
    result.log.push_back({0, 0.0, 0.0, v0});
    save_best(0);
  }

  while (step < static_cast<uint64_t>(cfg_.max_steps)) {
    const auto batches =
        MakeBatches(frames, cfg_.frames_per_batch, cfg_.seed, epoch);
    for (const auto& b : batches) {
      if (step >= static_cast<uint64_t>(cfg_.max_steps)) break;
      ++step;
      if (step <= start_step) continue;  // resume: replay the data order
      std::vector<const TrainSample*> batch;
      batch.reserve(b.size());
      for (int i : b) batch.push_back(&train[i]);
      auto [loss, tokens] = Step(batch, static_cast<int>(step));
      running_loss += loss;
      running_tokens += tokens;
      if (step % static_cast<uint64_t>(eval_every) == 0 ||
          step == static_cast<uint64_t>(cfg_.max_steps)) {
        const double train_avg =
            running_tokens > 0 ? running_loss / running_tokens : 0.0;
        const double valid_avg = EvalLoss(valid);
        result.log.push_back({static_cast<int>(step),
                              LrSchedule(static_cast<int>(step), cfg_),
                              train_avg, valid_avg});
        running_loss = 0.0;
        running_tokens = 0;
        if (valid_avg < result.best_valid_loss) {
          result.best_valid_loss = valid_avg;
          result.best_step = static_cast<int>(step);
          save_best(step);
        }
      }
    }
    ++epoch;
  }

  if (save) {
    SaveCheckpoint(last_path, *model_, vocab_symbols, step,
                   std::to_string(cfg_.seed), /*with_optimizer=*/true);
    result.last_checkpoint = last_path;
    if (result.best_checkpoint.empty()) save_best(step);
  }
  return result;
}

// ---- Checkpoints ----

namespace {

void PutBytes(std::ofstream& f, const void* p, size_t n) {
  f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void PutU32(std::ofstream& f, uint32_t v) { PutBytes(f, &v, 4); }
void PutU64(std::ofstream& f, uint64_t v) { PutBytes(f, &v, 8); }

void PutString(std::ofstream& f, const std::string& s) {
  PutU32(f, static_cast<uint32_t>(s.size()));
  PutBytes(f, s.data(), s.size());
}

void PutTensorF32(std::ofstream& f, const Mat& m) {
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      const float v = static_cast<float>(m(r, c));
      PutBytes(f, &v, 4);
    }
  }
}

void GetBytes(std::ifstream& f, void* p, size_t n, const std::string& path) {
  f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!f) throw FormatError("checkpoint truncated: " + path);
}

uint32_t GetU32(std::ifstream& f, const std::string& path) {
  uint32_t v;
  GetBytes(f, &v, 4, path);
  return v;
}

uint64_t GetU64(std::ifstream& f, const std::string& path) {
  uint64_t v;
  GetBytes(f, &v, 8, path);
  return v;
}

std::string GetString(std::ifstream& f, const std::string& path) {
  const uint32_t n = GetU32(f, path);
  if (n > (1u << 28)) throw FormatError("checkpoint string too large: " + path);
  std::string s(n, '\0');
  GetBytes(f, s.data(), n, path);
  return s;
}

void GetTensorF32(std::ifstream& f, Mat* m, const std::string& path) {
  for (long r = 0; r < m->rows(); ++r) {
    for (long c = 0; c < m->cols(); ++c) {
      float v;
      GetBytes(f, &v, 4, path);
      (*m)(r, c) = static_cast<double>(v);
    }
  }
}

constexpr char kCkptMagic[8] = {'S', 'O', 'T', 'K', 'P', 'T', '0', '1'};

}  // namespace

void SaveCheckpoint(const std::string& path, const AedModel& model,
                    const std::vector<std::string>& vocab_symbols,
                    uint64_t step, const std::string& rng_state,
                    bool with_optimizer) {
  json meta;
  meta["aed"] = json::parse(model.Config().ToJsonString());
  meta["vocab"] = vocab_symbols;
  const std::string meta_str = meta.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("SaveCheckpoint: cannot open " + path);
  PutBytes(f, kCkptMagic, 8);
  PutU32(f, 1);  // version
  PutString(f, meta_str);
  PutU64(f, Fnv1a64(meta_str));
  PutU64(f, step);
  PutString(f, rng_state);
  const auto& tensors = model.Params().Tensors();
  PutU32(f, static_cast<uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    PutString(f, t.name);
    PutU32(f, static_cast<uint32_t>(t.value.rows()));
    PutU32(f, static_cast<uint32_t>(t.value.cols()));
    PutTensorF32(f, t.value);
  }
  const uint8_t opt = with_optimizer ? 1 : 0;
  PutBytes(f, &opt, 1);
  if (with_optimizer) {
    for (const NamedTensor& t : tensors) {
      PutTensorF32(f, t.adam_m);
      PutTensorF32(f, t.adam_v);
    }
  }
  if (!f) throw InputError("SaveCheckpoint: short write to " + path);
}

LoadedCheckpoint LoadCheckpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("LoadCheckpoint: cannot open " + path);
  char magic[8];
  GetBytes(f, magic, 8, path);
  if (std::string(magic, 8) != std::string(kCkptMagic, 8))
    throw FormatError("LoadCheckpoint: bad magic in " + path);
  const uint32_t version = GetU32(f, path);
  if (version != 1)
    throw FormatError("LoadCheckpoint: unsupported version in " + path);
  const std::string meta_str = GetString(f, path);
  const uint64_t stored_hash = GetU64(f, path);
  if (stored_hash != Fnv1a64(meta_str))
    throw FormatError("LoadCheckpoint: config hash mismatch in " + path);

  LoadedCheckpoint out;
  json meta;
  try {
    meta = json::parse(meta_str);
  } catch (const json::exception& e) {
    throw FormatError("LoadCheckpoint: bad meta JSON: " + std::string(e.what()));
  }
  out.meta.config = AedConfig::FromJsonString(meta.at("aed").dump());
  out.meta.vocab_symbols = meta.at("vocab").get<std::vector<std::string>>();
  out.meta.config_hash = stored_hash;
  out.meta.step = GetU64(f, path);
  out.meta.rng_state = GetString(f, path);

  out.model = std::make_unique<AedModel>(out.meta.config);
  auto& tensors = out.model->Params().Tensors();
  const uint32_t count = GetU32(f, path);
  if (count != tensors.size())
    throw FormatError("LoadCheckpoint: tensor count mismatch in " + path);
  for (NamedTensor& t : tensors) {
    const std::string name = GetString(f, path);
    const uint32_t rows = GetU32(f, path);
    const uint32_t cols = GetU32(f, path);
    if (name != t.name || rows != static_cast<uint32_t>(t.value.rows()) ||
        cols != static_cast<uint32_t>(t.value.cols()))
      throw FormatError("LoadCheckpoint: tensor layout mismatch at " + name);
    GetTensorF32(f, &t.value, path);
  }
  uint8_t opt = 0;
  GetBytes(f, &opt, 1, path);
  out.meta.has_optimizer = opt != 0;
  if (out.meta.has_optimizer) {
    for (NamedTensor& t : tensors) {
      GetTensorF32(f, &t.adam_m, path);
      GetTensorF32(f, &t.adam_v, path);
    }
  }
  return out;
}

// ---- Gradient verification ----

double GradCheck(AedModel* model, const TrainSample& sample, LossKind kind,
                 SpecialIds ids, double eps, int min_coords, uint64_t seed) {
  const std::vector<const TrainSample*> batch = {&sample};
  const int cap = kDefaultFactorialCap;

  // Analytic gradients.
  model->Params().ZeroGrad();
  {
    Graph g;
    BatchLossOut out = BuildBatchLoss(model, &g, batch, kind, ids, cap);
    g.Backward(out.node);
  }
  std::vector<Mat> analytic;
  analytic.reserve(model->Params().Tensors().size());
  for (const NamedTensor& t : model->Params().Tensors()) analytic.push_back(t.grad);

  // Coordinate subset: everything when small, else a seeded random subset.
  std::vector<std::pair<int, long>> coords;
  long total = 0;
  for (const NamedTensor& t : model->Params().Tensors())
    total += t.value.size();
  if (total <= min_coords) {
    for (size_t ti = 0; ti < model->Params().Tensors().size(); ++ti) {
      const long n = model->Params().Tensors()[ti].value.size();
      for (long k = 0; k < n; ++k) coords.emplace_back(static_cast<int>(ti), k);
    }
  } else {
    Rng rng(Rng::Mix(seed, 0x67726164ULL));
    std::set<long> chosen;
    while (static_cast<int>(chosen.size()) < min_coords)
      chosen.insert(static_cast<long>(rng.UniformInt(static_cast<uint64_t>(total))));
    for (long flat : chosen) {
      long at = flat;
      for (size_t ti = 0; ti < model->Params().Tensors().size(); ++ti) {
        const long n = model->Params().Tensors()[ti].value.size();
        if (at < n) {
          coords.emplace_back(static_cast<int>(ti), at);
          break;
        }
        at -= n;
      }
    }
  }

  double max_rel = 0.0;
  for (const auto& [ti, k] : coords) {
    double* slot = model->Params().Tensors()[static_cast<size_t>(ti)].value.data() + k;
    const double orig = *slot;
    *slot = orig + eps;
    const double lp = ForwardBatchLoss(model, batch, kind, ids, cap, nullptr);
    *slot = orig - eps;
    const double lm = ForwardBatchLoss(model, batch, kind, ids, cap, nullptr);
    *slot = orig;
    const double fd = (lp - lm) / (2.0 * eps);
    const double an = analytic[static_cast<size_t>(ti)].data()[k];
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
    max_rel = std::max(max_rel, std::abs(fd - an) / denom);
  }
  return max_rel;
}

}  // namespace sotkit

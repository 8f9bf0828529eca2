// sotkit/pipeline.cc

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

#include "sotkit/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "sotkit/decoding.h"
#include "sotkit/vocab.h"
#include "sotkit/wav.h"

namespace sotkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ParallelFor(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int j = 0; j < jobs; ++j) {
    workers.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

void PrepareOutDir(const std::string& out_dir, bool force) {
  if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force)
    throw InputError("output directory exists and is not empty (use --force): " +
                     out_dir);
  fs::create_directories(fs::path(out_dir) / "wav");
}

std::vector<Utterance> LoadPool(const std::string& corpus_manifest) {
  std::vector<Utterance> pool;
  for (const CorpusRecord& r : ReadCorpusManifest(corpus_manifest)) {
    Utterance u;
    u.id = r.id;
    u.speaker = r.speaker;
    u.tokens = r.tokens;
    u.waveform = ReadWav(ResolveAudioPath(corpus_manifest, r.audio_path));
    u.duration = u.waveform.DurationSec();
    pool.push_back(std::move(u));
  }
  if (pool.empty()) throw InputError("empty corpus manifest: " + corpus_manifest);
  return pool;
}

}  // namespace

std::string RunSynth(const SynthOptions& opt) {
  PrepareOutDir(opt.out_dir, opt.force);
  const std::vector<Utterance> corpus = GenerateCorpus(opt.corpus, opt.seed);
  std::vector<CorpusRecord> records;
  records.reserve(corpus.size());
  for (const Utterance& u : corpus) {
    const std::string rel = "wav/" + u.id + ".wav";
    WriteWav((fs::path(opt.out_dir) / rel).string(), u.waveform);
    CorpusRecord r;
    r.id = u.id;
    r.speaker = u.speaker;
    r.tokens = u.tokens;
    r.audio_path = rel;
    r.duration_sec = u.duration;
    records.push_back(std::move(r));
  }
  const std::string manifest = (fs::path(opt.out_dir) / "corpus.jsonl").string();
  WriteCorpusManifest(manifest, records);
  return manifest;
}

std::string RunMix(const MixOptions& opt) {
  if (opt.speaker_counts.empty())
    throw ConfigError("RunMix: empty speaker count list");
  for (int s : opt.speaker_counts)
    if (s < 1) throw ConfigError("RunMix: speaker counts must be >= 1");
  PrepareOutDir(opt.out_dir, opt.force);
  const std::vector<Utterance> pool = LoadPool(opt.corpus_manifest);

  const int n = static_cast<int>(pool.size());
  std::vector<MixtureRecord> records(n);
  ParallelFor(n, opt.jobs, [&](int i) {
    Rng rng(Rng::Mix(opt.seed, static_cast<uint64_t>(i)));
    const int s = opt.speaker_counts[rng.UniformInt(opt.speaker_counts.size())];
    MixturePlan plan = PlanMixture(pool, s, opt.mode, &rng, pool[i].id);
    MixtureSample sample = RenderMixture(plan, pool, &rng);
    if (opt.volume_perturb) {
      const double gain = rng.Uniform(0.8, 1.25);
      for (double& x : sample.waveform.samples) x *= gain;
    }
    char name[32];
    std::snprintf(name, sizeof(name), "mix%06d", i);
    MixtureRecord r;
    r.mixture_id = name;
    r.source_ids = plan.source_ids;
    r.delays_sec = plan.delays;
    r.mode = MixModeName(opt.mode);
    r.audio_path = std::string("wav/") + name + ".wav";
    r.serialized_reference = sample.serialized_reference.tokens;
    WriteWav((fs::path(opt.out_dir) / r.audio_path).string(), sample.waveform);
    records[i] = std::move(r);
  });

  const std::string manifest = (fs::path(opt.out_dir) / "mixtures.jsonl").string();
  WriteMixtureManifest(manifest, records);
  return manifest;
}

std::vector<std::string> CollectVocabSymbols(
    const std::vector<MixtureRecord>& records) {
  std::set<std::string> symbols;
  for (const MixtureRecord& r : records) {
    for (const std::string& t : r.serialized_reference) {
      if (t != kSpeakerChangeSymbol && t != kEosSymbol) symbols.insert(t);
    }
  }
  return std::vector<std::string>(symbols.begin(), symbols.end());
}

std::vector<TrainSample> LoadTrainSamples(const std::string& mixture_manifest,
                                          const FrontendConfig& cfg,
                                          const Vocab& vocab) {
  std::vector<TrainSample> out;
  for (const MixtureRecord& r : ReadMixtureManifest(mixture_manifest)) {
    TrainSample s;
    s.id = r.mixture_id;
    const Waveform wav = ReadWav(ResolveAudioPath(mixture_manifest, r.audio_path));
    s.features = ExtractFeatures(wav, cfg).frames;
    s.frames = static_cast<int>(s.features.rows());
    SerializedReference ref;
    ref.tokens = r.serialized_reference;
    for (const auto& block : SplitSerialized(ref))
      s.blocks.push_back(vocab.Encode(block));
    s.serialized = vocab.Encode(r.serialized_reference);
    out.push_back(std::move(s));
  }
  if (out.empty()) throw InputError("empty mixture manifest: " + mixture_manifest);
  return out;
}

TrainOutput RunTrain(const TrainOptions& opt) {
  fs::create_directories(opt.out_dir);
  const auto train_records = ReadMixtureManifest(opt.train_manifest);

  std::unique_ptr<AedModel> model;
  Vocab vocab;
  AedConfig model_cfg = opt.model;
  uint64_t start_step = 0;
  if (!opt.resume.empty()) {
    LoadedCheckpoint ckpt = LoadCheckpoint(opt.resume);
    if (!ckpt.meta.has_optimizer)
      throw InputError("RunTrain: resume checkpoint has no optimizer state: " +
                       opt.resume);
    model = std::move(ckpt.model);
    model_cfg = ckpt.meta.config;
    vocab = Vocab(ckpt.meta.vocab_symbols);
    start_step = ckpt.meta.step;
  } else {
    vocab = Vocab(CollectVocabSymbols(train_records));
    model_cfg.vocab_size = vocab.Size();
    model_cfg.feature_dim = opt.frontend.n_mels * opt.frontend.stack;
  }

  std::vector<TrainSample> train =
      LoadTrainSamples(opt.train_manifest, opt.frontend, vocab);
  std::vector<TrainSample> valid =
      LoadTrainSamples(opt.valid_manifest, opt.frontend, vocab);

  if (opt.resume.empty()) {
    if (model_cfg.att_conv_width == 0) {
      std::vector<int> frames;
      frames.reserve(train.size());
      for (const TrainSample& s : train) frames.push_back(s.frames);
      std::nth_element(frames.begin(), frames.begin() + frames.size() / 2,
                       frames.end());
      model_cfg.att_conv_width = ResolveAttConvWidth(frames[frames.size() / 2]);
    }
    model = std::make_unique<AedModel>(model_cfg);
    model->InitParams(opt.train.seed);
  }

  const SpecialIds ids{vocab.ScId(), vocab.EosId()};
  Trainer trainer(model.get(), opt.train, ids);
  TrainOutput out;
  out.result = trainer.Train(train, valid, opt.out_dir, vocab.RegularSymbols(),
                             start_step);

  // Training log: one line per validation point.
  out.log_path = (fs::path(opt.out_dir) / "train_log.jsonl").string();
  {
    std::ofstream log(out.log_path, std::ios::trunc);
    if (!log) throw InputError("RunTrain: cannot open " + out.log_path);
    for (const TrainLogEntry& e : out.result.log) {
      json j;
      j["step"] = e.step;
      j["lr"] = e.lr;
      j["train_loss"] = e.train_loss;
      j["valid_loss"] = e.valid_loss;
      log << j.dump() << "\n";
    }
  }

  json cfg_json;
  cfg_json["model"] = json::parse(model_cfg.ToJsonString());
  cfg_json["loss"] = LossKindName(opt.train.loss_kind);
  cfg_json["peak_lr"] = opt.train.peak_lr;
  cfg_json["max_steps"] = opt.train.max_steps;
  cfg_json["warmup_steps"] = opt.train.ResolvedWarmup();
  cfg_json["hold_until"] = opt.train.ResolvedHold();
  cfg_json["decay_rate_per"] = opt.train.ResolvedDecayPer();
  cfg_json["frames_per_batch"] = opt.train.frames_per_batch;
  cfg_json["eval_every"] = opt.train.ResolvedEvalEvery();
  cfg_json["clip_norm"] = opt.train.clip_norm;
  cfg_json["seed"] = opt.train.seed;
  cfg_json["vocab"] = vocab.RegularSymbols();
  out.config_json = cfg_json.dump();
  out.config_hash = Fnv1a64(out.config_json);
  {
    const std::string cfg_path = (fs::path(opt.out_dir) / "config.json").string();
    std::ofstream f(cfg_path, std::ios::trunc);
    f << out.config_json << "\n";
  }
  return out;
}

std::string RunDecode(const DecodeOptions& opt) {
  LoadedCheckpoint ckpt = LoadCheckpoint(opt.checkpoint);
  AedModel* model = ckpt.model.get();
  const Vocab vocab(ckpt.meta.vocab_symbols);
  const auto records = ReadMixtureManifest(opt.mixture_manifest);
  const int n = static_cast<int>(records.size());
  if (n == 0) throw InputError("RunDecode: empty manifest");

  std::vector<HypothesisRecord> hyps(n);
  ParallelFor(n, opt.jobs, [&](int i) {
    const Waveform wav =
        ReadWav(ResolveAudioPath(opt.mixture_manifest, records[i].audio_path));
    const Mat feats = ExtractFeatures(wav, opt.frontend).frames;
    HypothesisRecord r;
    r.mixture_id = records[i].mixture_id;
    if (model->Config().num_branches == 1) {
      Hypothesis h = BeamSearch(model, feats, opt.beam, opt.max_len);
      r.num_speakers = h.num_speakers;
      r.score = h.score;
      r.truncated = h.truncated;
      for (const auto& t : h.transcripts) r.transcripts.push_back(vocab.Decode(t));
    } else {
      // One stream per branch; specials are stripped from each stream.
      auto branch_hyps = BeamSearchBranches(model, feats, opt.beam, opt.max_len);
      r.num_speakers = static_cast<int>(branch_hyps.size());
      for (const Hypothesis& h : branch_hyps) {
        r.score += h.score;
        r.truncated = r.truncated || h.truncated;
        std::vector<std::string> stream;
        for (int id : h.tokens) {
          if (id != vocab.ScId() && id != vocab.EosId())
            stream.push_back(vocab.Symbol(id));
        }
        r.transcripts.push_back(std::move(stream));
      }
    }
    hyps[i] = std::move(r);
  });

  WriteHypothesisFile(opt.out_path, hyps);
  return opt.out_path;
}

ScoreOutput RunScore(const ScoreOptions& opt) {
  const auto mixtures = ReadMixtureManifest(opt.mixture_manifest);
  const auto hyps = ReadHypothesisFile(opt.hypothesis_file);
  std::map<std::string, const HypothesisRecord*> by_id;
  for (const HypothesisRecord& h : hyps) by_id[h.mixture_id] = &h;

  fs::create_directories(opt.out_dir);
  ScoreOutput out;
  out.records_path = (fs::path(opt.out_dir) / "report.jsonl").string();
  out.report_path = (fs::path(opt.out_dir) / "report.txt").string();
  std::ofstream records(out.records_path, std::ios::trunc);
  if (!records) throw InputError("RunScore: cannot open " + out.records_path);

  std::vector<std::pair<int, int>> counting_pairs;
  for (const MixtureRecord& m : mixtures) {
    auto it = by_id.find(m.mixture_id);
    if (it == by_id.end())
      throw InputError("RunScore: no hypothesis for mixture " + m.mixture_id);
    const HypothesisRecord& h = *it->second;

    SerializedReference ref;
    ref.tokens = m.serialized_reference;
    const std::vector<TokenSeq> refs = SplitSerialized(ref);
    const WerReport report = MultiSpeakerWer(refs, h.transcripts,
                                             opt.factorial_cap, opt.use_hungarian);
    const int actual = static_cast<int>(refs.size());
    out.per_speaker_count[actual].Add(report);
    out.total.Add(report);
    counting_pairs.emplace_back(actual, h.num_speakers);

    json j;
    j["mixture_id"] = m.mixture_id;
    j["actual_speakers"] = actual;
    j["estimated_speakers"] = h.num_speakers;
    j["wer"] = report.wer;
    j["substitutions"] = report.substitutions;
    j["deletions"] = report.deletions;
    j["insertions"] = report.insertions;
    j["reference_tokens"] = report.reference_token_count;
    j["chosen_permutation"] = report.chosen_permutation;
    j["padded_empties"] = report.padded_empties;
    records << j.dump() << "\n";
  }

  out.counting = CountingAccuracy(counting_pairs);
  std::vector<std::pair<int, WerAccumulator>> per_s(
      out.per_speaker_count.begin(), out.per_speaker_count.end());
  std::ofstream report(out.report_path, std::ios::trunc);
  if (!report) throw InputError("RunScore: cannot open " + out.report_path);
  report << RenderWerTable(per_s, out.total) << "\n"
         << RenderCountingTable(out.counting);
  return out;
}

GradCheckOutput RunGradCheck(const GradCheckOptions& opt) {
  std::vector<std::string> kinds = opt.kinds;
  if (kinds.empty())
    kinds = {"single", "pit_brute", "pit_hungarian", "sot_minperm", "sot_fifo"};

  GradCheckOutput out;
  auto run_one = [&](const std::string& label, LossKind kind, bool saa) {
    // Small dims per the verification contract: M <= 8, V <= 6, T' <= 5.
    const bool pit = kind == LossKind::kPitBrute || kind == LossKind::kPitHungarian;
    AedConfig cfg;
    cfg.model_dim = 8;
    cfg.encoder_layers = saa ? 3 : 2;
    cfg.shared_encoder_layers = 1;
    cfg.decoder_layers = 2;
    cfg.num_branches = pit ? 2 : 1;
    cfg.saa = saa;
    cfg.vocab_size = 6;  // 4 regular + <sc> + <eos>
    cfg.feature_dim = 6;
    cfg.att_conv_filters = 3;
    cfg.att_conv_width = 3;
    AedModel model(cfg);
    model.InitParams(Rng::Mix(opt.seed, Fnv1a64(label)));

    Rng rng(Rng::Mix(opt.seed, 0xfeedULL));
    TrainSample sample;
    sample.id = label;
    sample.features.resize(5, cfg.feature_dim);
    for (long i = 0; i < sample.features.size(); ++i)
      sample.features.data()[i] = rng.Uniform(-1.0, 1.0);
    sample.frames = 5;
    sample.blocks = {{0, 2, 1}, {3, 1}};
    if (kind == LossKind::kSingle) sample.blocks = {{0, 2, 1}};
    const SpecialIds ids{cfg.vocab_size - 2, cfg.vocab_size - 1};
    std::vector<int> order(sample.blocks.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    sample.serialized = SerializeIds(sample.blocks, order, ids);

    const double err = GradCheck(&model, sample, kind, ids, opt.eps,
                                 opt.min_coords, opt.seed);
    out.max_rel_errors.emplace_back(label, err);
    out.ok = out.ok && err < opt.threshold;
  };

  for (const std::string& name : kinds)
    run_one(name, ParseLossKind(name), /*saa=*/false);
  if (opt.include_saa) run_one("sot_fifo+saa", LossKind::kSotFifo, /*saa=*/true);
  return out;
}

}  // namespace sotkit

// sotkit/aed.cc

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

#include "sotkit/aed.h"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "sotkit/common.h"

namespace sotkit {

using nlohmann::json;

void AedConfig::Validate() const {
  if (model_dim < 1) throw ConfigError("AedConfig: model_dim must be >= 1");
  if (encoder_layers < 1) throw ConfigError("AedConfig: encoder_layers must be >= 1");
  if (decoder_layers < 1) throw ConfigError("AedConfig: decoder_layers must be >= 1");
  if (vocab_size < 3)
    throw ConfigError("AedConfig: vocab_size must include at least one regular "
                      "symbol plus <sc> and <eos>");
  if (feature_dim < 1) throw ConfigError("AedConfig: feature_dim must be >= 1");
  if (num_branches < 1) throw ConfigError("AedConfig: num_branches must be >= 1");
  if (saa && num_branches != 1)
    throw ConfigError("AedConfig: saa requires a single output branch");
  if (EffectiveEncoderLayers() < 1)
    throw ConfigError("AedConfig: saa removes one encoder layer; need >= 2");
  if (shared_encoder_layers < 1 || shared_encoder_layers > encoder_layers)
    throw ConfigError("AedConfig: shared_encoder_layers out of range");
  if (num_branches > 1 && shared_encoder_layers >= EffectiveEncoderLayers())
    throw ConfigError("AedConfig: multi-branch models need at least one "
                      "branch-specific encoder layer");
  if (att_conv_filters < 1 || att_conv_width < 1)
    throw ConfigError("AedConfig: attention convolution shape must be positive");
}

std::string AedConfig::ToJsonString() const {
  json j;
  j["model_dim"] = model_dim;
  j["encoder_layers"] = encoder_layers;
  j["shared_encoder_layers"] = shared_encoder_layers;
  j["decoder_layers"] = decoder_layers;
  j["num_branches"] = num_branches;
  j["saa"] = saa;
  j["vocab_size"] = vocab_size;
  j["feature_dim"] = feature_dim;
  j["att_dim"] = att_dim;
  j["att_conv_filters"] = att_conv_filters;
  j["att_conv_width"] = att_conv_width;
  return j.dump();
}

AedConfig AedConfig::FromJsonString(const std::string& s) {
  json j;
  try {
    j = json::parse(s);
  } catch (const json::exception& e) {
    throw FormatError(std::string("AedConfig: bad JSON: ") + e.what());
  }
  AedConfig c;
  c.model_dim = j.at("model_dim").get<int>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.shared_encoder_layers = j.at("shared_encoder_layers").get<int>();
  c.decoder_layers = j.at("decoder_layers").get<int>();
  c.num_branches = j.at("num_branches").get<int>();
  c.saa = j.at("saa").get<bool>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.feature_dim = j.at("feature_dim").get<int>();
  c.att_dim = j.at("att_dim").get<int>();
  c.att_conv_filters = j.at("att_conv_filters").get<int>();
  c.att_conv_width = j.at("att_conv_width").get<int>();
  return c;
}

int ResolveAttConvWidth(int typical_frames) {
  const int w = typical_frames / 3;
  return std::max(3, std::min(100, w));
}

NamedTensor& ParamStore::Add(const std::string& name, int rows, int cols) {
  if (Has(name)) throw ContractError("ParamStore: duplicate tensor " + name);
  NamedTensor t;
  t.name = name;
  t.value = Mat::Zero(rows, cols);
  t.grad = Mat::Zero(rows, cols);
  t.adam_m = Mat::Zero(rows, cols);
  t.adam_v = Mat::Zero(rows, cols);
  tensors_.push_back(std::move(t));
  return tensors_.back();
}

NamedTensor& ParamStore::Get(const std::string& name) {
  for (NamedTensor& t : tensors_)
    if (t.name == name) return t;
  throw ContractError("ParamStore: unknown tensor " + name);
}

const NamedTensor& ParamStore::Get(const std::string& name) const {
  for (const NamedTensor& t : tensors_)
    if (t.name == name) return t;
  throw ContractError("ParamStore: unknown tensor " + name);
}

bool ParamStore::Has(const std::string& name) const {
  for (const NamedTensor& t : tensors_)
    if (t.name == name) return true;
  return false;
}

void ParamStore::ZeroGrad() {
  for (NamedTensor& t : tensors_) t.grad.setZero();
}

size_t ParamStore::TotalParams() const {
  size_t n = 0;
  for (const NamedTensor& t : tensors_) n += static_cast<size_t>(t.value.size());
  return n;
}

void RoundParamsToFloat(ParamStore* params) {
  for (NamedTensor& t : params->Tensors()) {
    for (long i = 0; i < t.value.size(); ++i)
      t.value.data()[i] = static_cast<double>(static_cast<float>(t.value.data()[i]));
  }
}

AedModel::AedModel(AedConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.Validate();
  BuildParams();
}

namespace {

std::string EncPrefix(int layer, int branch) {
  std::string p = "enc" + std::to_string(layer);
  if (branch >= 0) p += ".br" + std::to_string(branch);
  return p;
}

}  // namespace

void AedModel::BuildParams() {
  const int m = cfg_.model_dim;
  const int a = cfg_.ResolvedAttDim();
  const int v = cfg_.vocab_size;
  const int layers = cfg_.EffectiveEncoderLayers();
  const int shared =
      cfg_.num_branches > 1 ? cfg_.shared_encoder_layers : layers;

  params_.Add("embed", v + 1, m);  // +1 row: <sos> input embedding
  auto add_lstm = [&](const std::string& prefix, int in) {
    params_.Add(prefix + ".wx", in, 4 * m);
    params_.Add(prefix + ".wh", m, 4 * m);
    params_.Add(prefix + ".b", 1, 4 * m);
  };
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? cfg_.feature_dim : 2 * m;
    if (l < shared) {
      add_lstm(EncPrefix(l, -1) + ".fwd", in);
      add_lstm(EncPrefix(l, -1) + ".bwd", in);
      params_.Add(EncPrefix(l, -1) + ".ln.gamma", 1, 2 * m);
      params_.Add(EncPrefix(l, -1) + ".ln.beta", 1, 2 * m);
    } else {
      for (int b = 0; b < cfg_.num_branches; ++b) {
        add_lstm(EncPrefix(l, b) + ".fwd", in);
        add_lstm(EncPrefix(l, b) + ".bwd", in);
        params_.Add(EncPrefix(l, b) + ".ln.gamma", 1, 2 * m);
        params_.Add(EncPrefix(l, b) + ".ln.beta", 1, 2 * m);
      }
    }
  }
  params_.Add("att.wq", m, a);
  params_.Add("att.wh", 2 * m, a);
  params_.Add("att.wf", cfg_.att_conv_filters, a);
  params_.Add("att.bias", 1, a);
  params_.Add("att.v", a, 1);
  params_.Add("att.conv", cfg_.att_conv_filters, cfg_.att_conv_width);
  for (int l = 0; l < cfg_.decoder_layers; ++l)
    add_lstm("dec" + std::to_string(l), l == 0 ? 3 * m : m);
  if (cfg_.saa) add_lstm("saa", 3 * m);
  params_.Add("out.w", cfg_.saa ? m : 3 * m, v);
  params_.Add("out.b", 1, v);
}

void AedModel::InitParams(uint64_t seed) {
  Rng rng(seed);
  const int m = cfg_.model_dim;
  for (NamedTensor& t : params_.Tensors()) {
    const bool lstm_bias =
        t.name.size() > 2 && t.name.compare(t.name.size() - 2, 2, ".b") == 0;
    const bool out_bias = t.name == "out.b" || t.name == "att.bias";
    if (t.name.find(".ln.gamma") != std::string::npos) {
      t.value.setOnes();
    } else if (t.name.find(".ln.beta") != std::string::npos) {
      t.value.setZero();
    } else if (lstm_bias) {
      t.value.setZero();
      t.value.block(0, m, 1, m).setConstant(1.0);  // forget gate
    } else if (out_bias) {
      t.value.setZero();
    } else {
      for (long i = 0; i < t.value.size(); ++i)
        t.value.data()[i] = rng.Uniform(-0.05, 0.05);
    }
  }
  RoundParamsToFloat(&params_);
}

int AedModel::P(Graph* g, const std::string& name) {
  NamedTensor& t = params_.Get(name);
  return g->ParamCached(&t.value, &t.grad);
}

int AedModel::EmbeddingNode(Graph* g, int token_id) {
  if (token_id < 0 || token_id > cfg_.vocab_size)
    throw InputError("AedModel: token id outside vocabulary: " +
                     std::to_string(token_id));
  return g->Row(P(g, "embed"), token_id);
}

std::vector<std::vector<AedModel::EncoderOutput>> AedModel::EncodeBatch(
    Graph* g, const std::vector<const Mat*>& features) {
  if (features.empty()) throw InputError("EncodeBatch: empty batch");
  const int batch = static_cast<int>(features.size());
  int t_max = 0;
  for (const Mat* f : features) {
    if (f->rows() < 1) throw InputError("EncodeBatch: empty feature sequence");
    if (f->cols() != cfg_.feature_dim)
      throw ConfigError("EncodeBatch: feature dim " + std::to_string(f->cols()) +
                        " != configured " + std::to_string(cfg_.feature_dim));
    t_max = std::max(t_max, static_cast<int>(f->rows()));
  }

  // Padded per-step inputs and validity masks.
  std::vector<int> steps(t_max);
  std::vector<std::shared_ptr<Eigen::VectorXd>> masks(t_max);
  for (int t = 0; t < t_max; ++t) {
    Mat x = Mat::Zero(batch, cfg_.feature_dim);
    auto mask = std::make_shared<Eigen::VectorXd>(batch);
    bool all_valid = true;
    for (int i = 0; i < batch; ++i) {
      const bool valid = t < features[i]->rows();
      (*mask)(i) = valid ? 1.0 : 0.0;
      all_valid = all_valid && valid;
      if (valid) x.row(i) = features[i]->row(t);
    }
    steps[t] = g->Input(std::move(x));
    masks[t] = all_valid ? nullptr : mask;
  }

  const int m = cfg_.model_dim;
  const int layers = cfg_.EffectiveEncoderLayers();
  const int shared =
      cfg_.num_branches > 1 ? cfg_.shared_encoder_layers : layers;

  auto run_layer = [&](const std::vector<int>& x_steps,
                       const std::string& prefix) {
    const int wxf = P(g, prefix + ".fwd.wx");
    const int whf = P(g, prefix + ".fwd.wh");
    const int bf = P(g, prefix + ".fwd.b");
    const int wxb = P(g, prefix + ".bwd.wx");
    const int whb = P(g, prefix + ".bwd.wh");
    const int bb = P(g, prefix + ".bwd.b");
    const int gamma = P(g, prefix + ".ln.gamma");
    const int beta = P(g, prefix + ".ln.beta");
    std::vector<int> hf(t_max), hb(t_max);
    int state = g->Zeros(batch, 2 * m);
    for (int t = 0; t < t_max; ++t) {
      state = g->LstmCell(x_steps[t], state, wxf, whf, bf, masks[t]);
      hf[t] = g->SliceCols(state, 0, m);
    }
    state = g->Zeros(batch, 2 * m);
    for (int t = t_max - 1; t >= 0; --t) {
      state = g->LstmCell(x_steps[t], state, wxb, whb, bb, masks[t]);
      hb[t] = g->SliceCols(state, 0, m);
    }
    std::vector<int> out(t_max);
    for (int t = 0; t < t_max; ++t)
      out[t] = g->LayerNormRows(g->ConcatCols({hf[t], hb[t]}), gamma, beta);
    return out;
  };

  std::vector<int> cur = steps;
  for (int l = 0; l < shared; ++l) cur = run_layer(cur, EncPrefix(l, -1));

  std::vector<std::vector<EncoderOutput>> out(cfg_.num_branches);
  for (int b = 0; b < cfg_.num_branches; ++b) {
    std::vector<int> branch_steps = cur;
    for (int l = shared; l < layers; ++l)
      branch_steps = run_layer(branch_steps, EncPrefix(l, b));
    out[b].resize(batch);
    for (int i = 0; i < batch; ++i) {
      const int frames = static_cast<int>(features[i]->rows());
      std::vector<int> valid(branch_steps.begin(), branch_steps.begin() + frames);
      out[b][i] = EncoderOutput{g->StackStepRows(valid, i), frames};
    }
  }
  return out;
}

AedModel::DecoderState AedModel::InitDecoderState(Graph* g, int frames) {
  if (frames < 1) throw ContractError("InitDecoderState: frames must be >= 1");
  DecoderState st;
  const int m = cfg_.model_dim;
  st.lstm.resize(cfg_.decoder_layers);
  for (int l = 0; l < cfg_.decoder_layers; ++l) st.lstm[l] = g->Zeros(1, 2 * m);
  if (cfg_.saa) st.saa = g->Zeros(1, 2 * m);
  st.context = g->Zeros(1, 2 * m);
  st.alpha = g->Input(Mat::Constant(1, frames, 1.0 / frames));
  return st;
}

int AedModel::AttentionKeys(Graph* g, const EncoderOutput& enc) {
  return g->MatMul(enc.node, P(g, "att.wh"));
}

int AedModel::DecoderRnnStep(Graph* g, int prev_embedding, DecoderState* state) {
  const int m = cfg_.model_dim;
  int x = g->ConcatCols({prev_embedding, state->context});
  for (int l = 0; l < cfg_.decoder_layers; ++l) {
    const std::string p = "dec" + std::to_string(l);
    state->lstm[l] = g->LstmCell(x, state->lstm[l], P(g, p + ".wx"),
                                 P(g, p + ".wh"), P(g, p + ".b"));
    x = g->SliceCols(state->lstm[l], 0, m);
  }
  return x;
}

void AedModel::Attend(Graph* g, int q, const EncoderOutput& enc, int keys,
                      DecoderState* state) {
  const int qw = g->MatMul(q, P(g, "att.wq"));
  const int conv = g->LocationConv(state->alpha, P(g, "att.conv"));
  const int convw = g->MatMul(conv, P(g, "att.wf"));
  int pre = g->Add(keys, convw);
  pre = g->AddRowBroadcast(pre, qw);
  pre = g->AddRowBroadcast(pre, P(g, "att.bias"));
  const int scores = g->MatMul(g->Tanh(pre), P(g, "att.v"));
  state->alpha = g->RowSoftmax(g->Transpose(scores));
  state->context = g->MatMul(state->alpha, enc.node);
}

int AedModel::OutputLogits(Graph* g, int q, DecoderState* state) {
  int x = g->ConcatCols({state->context, q});
  if (cfg_.saa) {
    state->saa = g->LstmCell(x, state->saa, P(g, "saa.wx"), P(g, "saa.wh"),
                             P(g, "saa.b"));
    x = g->SliceCols(state->saa, 0, cfg_.model_dim);
  }
  return g->AddRowBroadcast(g->MatMul(x, P(g, "out.w")), P(g, "out.b"));
}

int AedModel::DecodeStep(Graph* g, const EncoderOutput& enc, int keys,
                         int prev_token, DecoderState* state) {
  const int q = DecoderRnnStep(g, EmbeddingNode(g, prev_token), state);
  Attend(g, q, enc, keys, state);
  return OutputLogits(g, q, state);
}

std::vector<int> AedModel::TeacherForcedLogits(Graph* g,
                                               const EncoderOutput& enc,
                                               const std::vector<int>& reference) {
  if (reference.empty())
    throw ContractError("TeacherForcedLogits: empty reference");
  for (int id : reference) {
    if (id < 0 || id >= cfg_.vocab_size)
      throw InputError("TeacherForcedLogits: reference token outside vocabulary");
  }
  const int keys = AttentionKeys(g, enc);
  DecoderState state = InitDecoderState(g, enc.frames);
  std::vector<int> logits(reference.size());
  for (size_t n = 0; n < reference.size(); ++n) {
    const int prev = n == 0 ? SosId() : reference[n - 1];
    logits[n] = DecodeStep(g, enc, keys, prev, &state);
  }
  return logits;
}

std::vector<Mat> AedModel::Encode(const Mat& features) {
  Graph g;
  auto enc = EncodeBatch(&g, {&features});
  std::vector<Mat> out;
  out.reserve(enc.size());
  for (const auto& branch : enc) out.push_back(g.Value(branch[0].node));
  return out;
}

std::vector<Eigen::VectorXd> AedModel::ForwardTeacherForced(
    const Mat& features, const std::vector<int>& reference, int branch) {
  if (branch < 0 || branch >= cfg_.num_branches)
    throw ContractError("ForwardTeacherForced: branch out of range");
  Graph g;
  auto enc = EncodeBatch(&g, {&features});
  std::vector<int> logits = TeacherForcedLogits(&g, enc[branch][0], reference);
  std::vector<Eigen::VectorXd> out;
  out.reserve(logits.size());
  for (int id : logits) {
    Mat p = g.Value(g.RowSoftmax(id));
    out.push_back(p.row(0).transpose());
  }
  return out;
}

}  // namespace sotkit

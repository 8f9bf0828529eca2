// sotkit/aed.h

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

#ifndef SOTKIT_AED_H_
#define SOTKIT_AED_H_

#include <string>
#include <vector>

#include "sotkit/graph.h"

namespace sotkit {

// Attention-based encoder-decoder configuration. The encoder is a stack of
// bidirectional LSTM layers with layer normalization after each; multi-branch
// setups share the first shared_encoder_layers and give each branch its own
// remaining layers. The decoder is a stack of unidirectional LSTM layers
// without layer normalization, driven by single-head location-aware
// content-based attention. When saa is set, one extra unidirectional LSTM
// runs between the attention context and the output projection, and one
// encoder layer is removed to keep the parameter count comparable.
struct AedConfig {
  int model_dim = 64;             // M: per-direction LSTM width
  int encoder_layers = 6;
  int shared_encoder_layers = 5;  // used when num_branches > 1
  int decoder_layers = 2;
  int num_branches = 1;           // output branches (1 for serialized output)
  bool saa = false;
  int vocab_size = 0;             // output symbols, includes <sc> and <eos>
  int feature_dim = 240;
  int att_dim = 0;                // attention hidden size; 0 -> model_dim
  int att_conv_filters = 10;
  int att_conv_width = 7;

  int ResolvedAttDim() const { return att_dim > 0 ? att_dim : model_dim; }
  int EffectiveEncoderLayers() const {
    return encoder_layers - (saa ? 1 : 0);
  }
  void Validate() const;

  std::string ToJsonString() const;
  static AedConfig FromJsonString(const std::string& s);
};

// Suggested location-convolution width for a typical encoder length,
// shrinking the full-scale width of 100 proportionally (minimum 3).
int ResolveAttConvWidth(int typical_frames);

struct NamedTensor {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;
};

// Ordered, name-addressable parameter set. Creation order is the canonical
// serialization order.
class ParamStore {
 public:
  NamedTensor& Add(const std::string& name, int rows, int cols);
  NamedTensor& Get(const std::string& name);
  const NamedTensor& Get(const std::string& name) const;
  bool Has(const std::string& name) const;
  std::vector<NamedTensor>& Tensors() { return tensors_; }
  const std::vector<NamedTensor>& Tensors() const { return tensors_; }
  void ZeroGrad();
  size_t TotalParams() const;

 private:
  std::vector<NamedTensor> tensors_;
};

// Rounds every parameter (not gradients) to the nearest float32 value, so
// 32-bit checkpoints round-trip bit-exactly.
void RoundParamsToFloat(ParamStore* params);

class AedModel {
 public:
  explicit AedModel(AedConfig cfg);

  // Uniform(-0.05, 0.05) weights, LSTM forget-gate bias 1, layer norm gain 1.
  // Values are rounded to float32 so checkpoints are lossless.
  void InitParams(uint64_t seed);

  const AedConfig& Config() const { return cfg_; }
  ParamStore& Params() { return params_; }
  const ParamStore& Params() const { return params_; }

  // ---- Graph building (training and decoding share these paths) ----

  struct EncoderOutput {
    int node = -1;  // T' x 2M matrix node
    int frames = 0;
  };

  // Batched encoder over per-sample feature matrices (T_i x D). Padded
  // positions are masked out of the recurrences and never reach the
  // per-sample outputs. Returns [branch][sample].
  std::vector<std::vector<EncoderOutput>> EncodeBatch(
      Graph* g, const std::vector<const Mat*>& features);

  struct DecoderState {
    std::vector<int> lstm;  // per decoder layer, 1 x 2M fused [h | c]
    int saa = -1;           // 1 x 2M fused, only when configured
    int context = -1;       // 1 x 2M
    int alpha = -1;         // 1 x T'
  };

  // Zero states, zero context, uniform initial attention.
  DecoderState InitDecoderState(Graph* g, int frames);

  // H^enc * W_h, precomputed once per decode run.
  int AttentionKeys(Graph* g, const EncoderOutput& enc);

  // Decoder recurrence consuming [embedding; previous context]; returns the
  // new top-layer hidden state q.
  int DecoderRnnStep(Graph* g, int prev_embedding, DecoderState* state);

  // Location-aware content attention; replaces state->alpha and
  // state->context.
  void Attend(Graph* g, int q, const EncoderOutput& enc, int keys,
              DecoderState* state);

  // Output logits over V from (context, q); advances the SAA recurrence when
  // configured.
  int OutputLogits(Graph* g, int q, DecoderState* state);

  // Full step: embed previous token, decoder RNN, attention, output logits.
  int DecodeStep(Graph* g, const EncoderOutput& enc, int keys, int prev_token,
                 DecoderState* state);

  // One logits node per reference position (reference includes final <eos>;
  // position n is conditioned on reference tokens < n).
  std::vector<int> TeacherForcedLogits(Graph* g, const EncoderOutput& enc,
                                       const std::vector<int>& reference);

  // ---- Value-level conveniences (build and discard an internal graph) ----

  // Per-branch encoder embeddings for one feature matrix.
  std::vector<Mat> Encode(const Mat& features);

  // Per-position output distributions under teacher forcing.
  std::vector<Eigen::VectorXd> ForwardTeacherForced(
      const Mat& features, const std::vector<int>& reference, int branch = 0);

  int SosId() const { return cfg_.vocab_size; }

 private:
  int P(Graph* g, const std::string& name);
  int EmbeddingNode(Graph* g, int token_id);
  void BuildParams();

  AedConfig cfg_;
  ParamStore params_;
};

}  // namespace sotkit

#endif  // SOTKIT_AED_H_

// sotkit/frontend.h

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

#ifndef SOTKIT_FRONTEND_H_
#define SOTKIT_FRONTEND_H_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sotkit/wav.h"

namespace sotkit {

struct FrontendConfig {
  int n_mels = 80;
  double fmin = 20.0;
  double fmax = 0.0;  // 0 -> sample_rate / 2 - 100
  double floor = 1e-10;
  double frame_shift = 0.010;   // seconds
  double frame_length = 0.025;  // seconds
  double preemphasis = 0.97;
  bool mean_normalize = true;   // applied by the pipeline, not by LogMel
  int stack = 3;

  double ResolvedFmax(int sample_rate) const {
    return fmax > 0.0 ? fmax : sample_rate / 2.0 - 100.0;
  }
};

// T x D matrix of features, one row per frame.
struct FeatureSequence {
  Eigen::MatrixXd frames;
  double frame_shift = 0.010;
  double frame_length = 0.025;

  int NumFrames() const { return static_cast<int>(frames.rows()); }
  int Dim() const { return static_cast<int>(frames.cols()); }
};

double HzToMel(double hz);
double MelToHz(double mel);

// The n_mels + 2 mel-equidistant boundary points in Hz; triangular filter m
// spans [points[m], points[m+2]] and peaks at points[m+1].
std::vector<double> MelBoundaryPoints(int n_mels, double fmin, double fmax);

// Peak frequency of each triangular filter.
std::vector<double> MelBinCenters(int n_mels, double fmin, double fmax);

// Log mel filterbank energies. Per frame: pre-emphasis, Hann window,
// magnitude-squared DFT, triangular mel filterbank, log(max(e, floor)).
// Number of frames: 1 + floor((len - frame_len) / shift).
// Throws InputError when the waveform is shorter than one frame.
FeatureSequence LogMel(const Waveform& wav, const FrontendConfig& cfg);

// Subtracts the per-dimension mean over frames.
void MeanNormalize(FeatureSequence* feats);

// Concatenates groups of k consecutive frames with stride k; the final
// partial group repeats the last frame. k = 1 is the identity.
FeatureSequence StackFrames(const FeatureSequence& feats, int k);

// Runs the full pipeline: LogMel, optional mean normalization, stacking.
FeatureSequence ExtractFeatures(const Waveform& wav, const FrontendConfig& cfg);

// Binary feature dump: header {T, D, frame_shift}, then row-major f32.
void WriteFeatureFile(const std::string& path, const FeatureSequence& feats);
FeatureSequence ReadFeatureFile(const std::string& path);

}  // namespace sotkit

#endif  // SOTKIT_FRONTEND_H_

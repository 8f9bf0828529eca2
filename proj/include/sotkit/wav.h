// sotkit/wav.h

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

#ifndef SOTKIT_WAV_H_
#define SOTKIT_WAV_H_

#include <string>
#include <vector>

namespace sotkit {

// Mono waveform held as real-valued samples (full scale is [-1, 1] when
// quantized to PCM; in memory amplitudes are unbounded).
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  double DurationSec() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// 16-bit mono PCM WAV. Samples are clamped to [-1, 1] and rounded on write.
void WriteWav(const std::string& path, const Waveform& wav);
Waveform ReadWav(const std::string& path);

}  // namespace sotkit

#endif  // SOTKIT_WAV_H_

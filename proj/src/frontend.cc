// sotkit/frontend.cc

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

#include "sotkit/frontend.h"

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>

#include "sotkit/common.h"

namespace sotkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

// In-place radix-2 Cooley-Tukey FFT.
void FftInplace(std::vector<std::complex<double>>* x) {
  const size_t n = x->size();
  if (n <= 1) return;
  size_t j = 0;
  for (size_t i = 0; i < n; ++i) {
    if (j > i) std::swap((*x)[i], (*x)[j]);
    size_t m = n >> 1;
    while (m >= 1 && j >= m) {
      j -= m;
      m >>= 1;
    }
    j += m;
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    std::complex<double> wlen = std::exp(std::complex<double>(0, -2.0 * kPi / len));
    for (size_t k = 0; k < n; k += len) {
      std::complex<double> w = 1.0;
      for (size_t i = 0; i < len / 2; ++i) {
        std::complex<double> t = w * (*x)[k + i + len / 2];
        std::complex<double> u = (*x)[k + i];
        (*x)[k + i] = u + t;
        (*x)[k + i + len / 2] = u - t;
        w *= wlen;
      }
    }
  }
}

size_t NextPow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> MelBoundaryPoints(int n_mels, double fmin, double fmax) {
  if (n_mels < 1) throw ConfigError("MelBoundaryPoints: n_mels must be >= 1");
  if (!(fmin >= 0.0 && fmax > fmin))
    throw ConfigError("MelBoundaryPoints: need 0 <= fmin < fmax");
  std::vector<double> pts(n_mels + 2);
  double mlo = HzToMel(fmin), mhi = HzToMel(fmax);
  for (int i = 0; i < n_mels + 2; ++i)
    pts[i] = MelToHz(mlo + (mhi - mlo) * i / (n_mels + 1));
  return pts;
}

std::vector<double> MelBinCenters(int n_mels, double fmin, double fmax) {
  std::vector<double> pts = MelBoundaryPoints(n_mels, fmin, fmax);
  return std::vector<double>(pts.begin() + 1, pts.end() - 1);
}

FeatureSequence LogMel(const Waveform& wav, const FrontendConfig& cfg) {
  const int sr = wav.sample_rate;
  const int frame_len = static_cast<int>(std::lround(cfg.frame_length * sr));
  const int shift = static_cast<int>(std::lround(cfg.frame_shift * sr));
  if (frame_len <= 0 || shift <= 0)
    throw ConfigError("LogMel: frame length and shift must be positive");
  if (static_cast<int>(wav.samples.size()) < frame_len)
    throw InputError("LogMel: waveform shorter than one frame");
  const double fmax = cfg.ResolvedFmax(sr);
  if (!(sr > 2.0 * fmax))
    throw ConfigError("LogMel: sample_rate must exceed 2*fmax");

  const int num_frames =
      1 + (static_cast<int>(wav.samples.size()) - frame_len) / shift;
  const size_t nfft = NextPow2(static_cast<size_t>(frame_len));
  const int nbins = static_cast<int>(nfft / 2) + 1;

  // Hann window (symmetric).
  std::vector<double> window(frame_len);
  for (int i = 0; i < frame_len; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (frame_len - 1));

  // Triangular mel filterbank as a dense weight matrix over DFT bins.
  std::vector<double> pts = MelBoundaryPoints(cfg.n_mels, cfg.fmin, fmax);
  Eigen::MatrixXd fbank = Eigen::MatrixXd::Zero(cfg.n_mels, nbins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    double lo = pts[m], ctr = pts[m + 1], hi = pts[m + 2];
    for (int k = 0; k < nbins; ++k) {
      double f = static_cast<double>(k) * sr / static_cast<double>(nfft);
      if (f <= lo || f >= hi) continue;
      fbank(m, k) = f <= ctr ? (f - lo) / (ctr - lo) : (hi - f) / (hi - ctr);
    }
  }

  FeatureSequence out;
  out.frame_shift = cfg.frame_shift;
  out.frame_length = cfg.frame_length;
  out.frames.resize(num_frames, cfg.n_mels);
  std::vector<std::complex<double>> buf(nfft);
  Eigen::VectorXd power(nbins);
  for (int t = 0; t < num_frames; ++t) {
    const double* frame = wav.samples.data() + static_cast<size_t>(t) * shift;
    // Pre-emphasis inside the frame; the first sample uses itself as history.
    for (size_t i = 0; i < nfft; ++i) buf[i] = 0.0;
    for (int i = frame_len - 1; i > 0; --i)
      buf[i] = (frame[i] - cfg.preemphasis * frame[i - 1]) * window[i];
    buf[0] = (frame[0] - cfg.preemphasis * frame[0]) * window[0];
    FftInplace(&buf);
    for (int k = 0; k < nbins; ++k) power(k) = std::norm(buf[k]);
    Eigen::VectorXd mel = fbank * power;
    for (int m = 0; m < cfg.n_mels; ++m)
      out.frames(t, m) = std::log(std::max(mel(m), cfg.floor));
  }
  return out;
}

void MeanNormalize(FeatureSequence* feats) {
  if (feats->frames.rows() == 0) return;
  Eigen::RowVectorXd mean = feats->frames.colwise().mean();
  feats->frames.rowwise() -= mean;
}

FeatureSequence StackFrames(const FeatureSequence& feats, int k) {
  if (k < 1) throw ContractError("StackFrames: k must be >= 1");
  if (k == 1) return feats;
  const int t_in = feats.NumFrames();
  const int d = feats.Dim();
  if (t_in == 0) throw InputError("StackFrames: empty feature sequence");
  const int t_out = (t_in + k - 1) / k;
  FeatureSequence out;
  out.frame_shift = feats.frame_shift * k;
  out.frame_length = feats.frame_length;
  out.frames.resize(t_out, d * k);
  for (int g = 0; g < t_out; ++g) {
    for (int j = 0; j < k; ++j) {
      int src = std::min(g * k + j, t_in - 1);
      out.frames.block(g, j * d, 1, d) = feats.frames.row(src);
    }
  }
  return out;
}

FeatureSequence ExtractFeatures(const Waveform& wav, const FrontendConfig& cfg) {
  FeatureSequence f = LogMel(wav, cfg);
  if (cfg.mean_normalize) MeanNormalize(&f);
  return StackFrames(f, cfg.stack);
}

void WriteFeatureFile(const std::string& path, const FeatureSequence& feats) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("WriteFeatureFile: cannot open " + path);
  const char magic[8] = {'S', 'K', 'F', 'E', 'A', 'T', '0', '1'};
  f.write(magic, 8);
  int32_t t = feats.NumFrames(), d = feats.Dim();
  double shift = feats.frame_shift;
  f.write(reinterpret_cast<const char*>(&t), 4);
  f.write(reinterpret_cast<const char*>(&d), 4);
  f.write(reinterpret_cast<const char*>(&shift), 8);
  for (int r = 0; r < t; ++r) {
    for (int c = 0; c < d; ++c) {
      float v = static_cast<float>(feats.frames(r, c));
      f.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
  if (!f) throw InputError("WriteFeatureFile: short write to " + path);
}

FeatureSequence ReadFeatureFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("ReadFeatureFile: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != "SKFEAT01")
    throw FormatError("ReadFeatureFile: bad magic in " + path);
  int32_t t = 0, d = 0;
  double shift = 0;
  f.read(reinterpret_cast<char*>(&t), 4);
  f.read(reinterpret_cast<char*>(&d), 4);
  f.read(reinterpret_cast<char*>(&shift), 8);
  if (!f || t < 0 || d <= 0)
    throw FormatError("ReadFeatureFile: bad header in " + path);
  FeatureSequence out;
  out.frame_shift = shift;
  out.frames.resize(t, d);
  for (int r = 0; r < t; ++r) {
    for (int c = 0; c < d; ++c) {
      float v;
      f.read(reinterpret_cast<char*>(&v), 4);
      out.frames(r, c) = v;
    }
  }
  if (!f) throw FormatError("ReadFeatureFile: truncated data in " + path);
  return out;
}

}  // namespace sotkit

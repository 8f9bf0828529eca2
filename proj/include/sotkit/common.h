// sotkit/common.h

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

#ifndef SOTKIT_COMMON_H_
#define SOTKIT_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sotkit {

// Error hierarchy. Commands exit nonzero exactly when one of these escapes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (model dims, vocab capacity, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data (empty waveform, unknown token, missing file, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// File or stream format problems (sample-rate mismatch, bad magic, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Violated API contract (length mismatch, non-square cost matrix, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Mixture planning gave up (retry budget exhausted).
class PlanningError : public Error {
 public:
  using Error::Error;
};

// Deterministic RNG with implementation-defined-free distributions.
// std::mt19937_64 output is fully specified by the standard, but the
// <random> distributions are not; we derive all draws ourselves so that
// manifests and checkpoints are byte-identical across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1), 53-bit resolution.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n), unbiased. n must be > 0.
  uint64_t UniformInt(uint64_t n);

  // Fisher-Yates shuffle.
  template <typename T>
  void Shuffle(std::vector<T>* v) {
    for (size_t i = v->size(); i > 1; --i) {
      size_t j = static_cast<size_t>(UniformInt(i));
      std::swap((*v)[i - 1], (*v)[j]);
    }
  }

  std::string SaveState() const;
  void LoadState(const std::string& state);

  // Derives an independent stream seed from (seed, stream), splitmix64.
  static uint64_t Mix(uint64_t seed, uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

// FNV-1a 64-bit, used for config hashes.
uint64_t Fnv1a64(const std::string& data);

std::vector<std::string> SplitString(const std::string& s, char sep = ' ');
std::string JoinStrings(const std::vector<std::string>& parts,
                        const std::string& sep = " ");

}  // namespace sotkit

#endif  // SOTKIT_COMMON_H_

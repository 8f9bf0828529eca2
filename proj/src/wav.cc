// sotkit/wav.cc

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

#include "sotkit/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "sotkit/common.h"

namespace sotkit {

namespace {

void PutU32(std::string* s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::string* s, uint16_t v) {
  for (int i = 0; i < 2; ++i) s->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t GetU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t GetU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void WriteWav(const std::string& path, const Waveform& wav) {
  const uint32_t num_samples = static_cast<uint32_t>(wav.samples.size());
  const uint32_t data_bytes = num_samples * 2;
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, 1);  // PCM
  PutU16(&out, 1);  // mono
  PutU32(&out, static_cast<uint32_t>(wav.sample_rate));
  PutU32(&out, static_cast<uint32_t>(wav.sample_rate) * 2);
  PutU16(&out, 2);   // block align
  PutU16(&out, 16);  // bits per sample
  out += "data";
  PutU32(&out, data_bytes);
  for (double x : wav.samples) {
    double c = std::clamp(x, -1.0, 1.0);
    int16_t q = static_cast<int16_t>(std::llround(c * 32767.0));
    PutU16(&out, static_cast<uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("WriteWav: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw InputError("WriteWav: short write to " + path);
}

Waveform ReadWav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("ReadWav: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data());
  if (buf.size() < 44 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw FormatError("ReadWav: not a RIFF/WAVE file: " + path);
  }
  // Walk chunks; accept only 16-bit mono PCM.
  size_t pos = 12;
  Waveform wav;
  bool have_fmt = false, have_data = false;
  while (pos + 8 <= buf.size()) {
    uint32_t sz = GetU32(p + pos + 4);
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (sz < 16 || pos + 8 + sz > buf.size())
        throw FormatError("ReadWav: truncated fmt chunk: " + path);
      const unsigned char* q = p + pos + 8;
      if (GetU16(q) != 1 || GetU16(q + 2) != 1 || GetU16(q + 14) != 16)
        throw FormatError("ReadWav: only 16-bit mono PCM supported: " + path);
      wav.sample_rate = static_cast<int>(GetU32(q + 4));
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (pos + 8 + sz > buf.size())
        throw FormatError("ReadWav: truncated data chunk: " + path);
      const unsigned char* q = p + pos + 8;
      wav.samples.resize(sz / 2);
      for (size_t i = 0; i < wav.samples.size(); ++i) {
        int16_t v = static_cast<int16_t>(GetU16(q + 2 * i));
        wav.samples[i] = static_cast<double>(v) / 32767.0;
      }
      have_data = true;
    }
    pos += 8 + sz + (sz & 1);
  }
  if (!have_fmt || !have_data)
    throw FormatError("ReadWav: missing fmt or data chunk: " + path);
  return wav;
}

}  // namespace sotkit

// sotkit/manifest.h

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

#ifndef SOTKIT_MANIFEST_H_
#define SOTKIT_MANIFEST_H_

#include <string>
#include <vector>

#include "sotkit/mixer.h"

namespace sotkit {

// Manifests are JSON-lines files: one record per line. audio_path fields are
// relative to the manifest's directory.

struct CorpusRecord {
  std::string id;
  std::string speaker;
  std::vector<std::string> tokens;
  std::string audio_path;
  double duration_sec = 0.0;
};

struct MixtureRecord {
  std::string mixture_id;
  std::vector<std::string> source_ids;
  std::vector<double> delays_sec;
  std::string mode;  // "train" | "eval"
  std::string audio_path;
  std::vector<std::string> serialized_reference;  // tokens incl. <sc>, <eos>

  int NumSpeakers() const { return static_cast<int>(source_ids.size()); }
};

struct HypothesisRecord {
  std::string mixture_id;
  int num_speakers = 0;
  std::vector<std::vector<std::string>> transcripts;
  double score = 0.0;
  bool truncated = false;
};

void WriteCorpusManifest(const std::string& path,
                         const std::vector<CorpusRecord>& records);
std::vector<CorpusRecord> ReadCorpusManifest(const std::string& path);

void WriteMixtureManifest(const std::string& path,
                          const std::vector<MixtureRecord>& records);
std::vector<MixtureRecord> ReadMixtureManifest(const std::string& path);

void WriteHypothesisFile(const std::string& path,
                         const std::vector<HypothesisRecord>& records);
std::vector<HypothesisRecord> ReadHypothesisFile(const std::string& path);

// Resolves a manifest-relative audio path against the manifest location.
std::string ResolveAudioPath(const std::string& manifest_path,
                             const std::string& audio_path);

}  // namespace sotkit

#endif  // SOTKIT_MANIFEST_H_

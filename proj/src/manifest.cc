// sotkit/manifest.cc

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

#include "sotkit/manifest.h"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sotkit/common.h"

namespace sotkit {

namespace {

using nlohmann::json;

std::vector<json> ReadJsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open manifest: " + path);
  std::vector<json> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": bad JSON: " +
                        e.what());
    }
  }
  return out;
}

void WriteLines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw InputError("cannot open for writing: " + path);
  for (const std::string& l : lines) f << l << "\n";
  if (!f) throw InputError("short write to " + path);
}

template <typename T>
T Get(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key))
    throw FormatError(path + ": missing field '" + std::string(key) + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(path + ": bad field '" + std::string(key) + "': " + e.what());
  }
}

}  // namespace

void WriteCorpusManifest(const std::string& path,
                         const std::vector<CorpusRecord>& records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const CorpusRecord& r : records) {
    json j;
    j["id"] = r.id;
    j["speaker"] = r.speaker;
    j["tokens"] = JoinStrings(r.tokens);
    j["audio_path"] = r.audio_path;
    j["duration_sec"] = r.duration_sec;
    lines.push_back(j.dump());
  }
  WriteLines(path, lines);
}

std::vector<CorpusRecord> ReadCorpusManifest(const std::string& path) {
  std::vector<CorpusRecord> out;
  for (const json& j : ReadJsonl(path)) {
    CorpusRecord r;
    r.id = Get<std::string>(j, "id", path);
    r.speaker = Get<std::string>(j, "speaker", path);
    r.tokens = SplitString(Get<std::string>(j, "tokens", path));
    r.audio_path = Get<std::string>(j, "audio_path", path);
    r.duration_sec = Get<double>(j, "duration_sec", path);
    if (r.tokens.empty()) throw FormatError(path + ": empty tokens for " + r.id);
    out.push_back(std::move(r));
  }
  return out;
}

void WriteMixtureManifest(const std::string& path,
                          const std::vector<MixtureRecord>& records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const MixtureRecord& r : records) {
    json j;
    j["mixture_id"] = r.mixture_id;
    j["source_ids"] = r.source_ids;
    j["delays_sec"] = r.delays_sec;
    j["mode"] = r.mode;
    j["audio_path"] = r.audio_path;
    j["serialized_reference"] = JoinStrings(r.serialized_reference);
    lines.push_back(j.dump());
  }
  WriteLines(path, lines);
}

std::vector<MixtureRecord> ReadMixtureManifest(const std::string& path) {
  std::vector<MixtureRecord> out;
  for (const json& j : ReadJsonl(path)) {
    MixtureRecord r;
    r.mixture_id = Get<std::string>(j, "mixture_id", path);
    r.source_ids = Get<std::vector<std::string>>(j, "source_ids", path);
    r.delays_sec = Get<std::vector<double>>(j, "delays_sec", path);
    r.mode = Get<std::string>(j, "mode", path);
    r.audio_path = Get<std::string>(j, "audio_path", path);
    r.serialized_reference =
        SplitString(Get<std::string>(j, "serialized_reference", path));
    if (r.source_ids.size() != r.delays_sec.size())
      throw FormatError(path + ": source_ids/delays_sec mismatch for " + r.mixture_id);
    out.push_back(std::move(r));
  }
  return out;
}

void WriteHypothesisFile(const std::string& path,
                         const std::vector<HypothesisRecord>& records) {
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const HypothesisRecord& r : records) {
    json j;
    j["mixture_id"] = r.mixture_id;
    j["num_speakers"] = r.num_speakers;
    std::vector<std::string> joined;
    for (const auto& t : r.transcripts) joined.push_back(JoinStrings(t));
    j["transcripts"] = joined;
    j["score"] = r.score;
    j["truncated"] = r.truncated;
    lines.push_back(j.dump());
  }
  WriteLines(path, lines);
}

std::vector<HypothesisRecord> ReadHypothesisFile(const std::string& path) {
  std::vector<HypothesisRecord> out;
  for (const json& j : ReadJsonl(path)) {
    HypothesisRecord r;
    r.mixture_id = Get<std::string>(j, "mixture_id", path);
    r.num_speakers = Get<int>(j, "num_speakers", path);
    for (const std::string& t : Get<std::vector<std::string>>(j, "transcripts", path))
      r.transcripts.push_back(SplitString(t));
    r.score = Get<double>(j, "score", path);
    r.truncated = Get<bool>(j, "truncated", path);
    out.push_back(std::move(r));
  }
  return out;
}

std::string ResolveAudioPath(const std::string& manifest_path,
                             const std::string& audio_path) {
  std::filesystem::path p(audio_path);
  if (p.is_absolute()) return audio_path;
  return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

}  // namespace sotkit

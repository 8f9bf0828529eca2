// sotkit/vocab.h

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

#ifndef SOTKIT_VOCAB_H_
#define SOTKIT_VOCAB_H_

#include <string>
#include <unordered_map>
#include <vector>

namespace sotkit {

// Special output symbols. <sc> separates speakers inside a serialized
// reference, <eos> terminates the whole sequence. <sos> exists only as a
// decoder input embedding and is never emitted or written to manifests.
inline const char* kSpeakerChangeSymbol = "<sc>";
inline const char* kEosSymbol = "<eos>";
inline const char* kSosSymbol = "<sos>";

// Output vocabulary: regular symbols first, then <sc>, then <eos>.
// Size() counts all output symbols including the two specials; SosId() is
// one past the end and indexes only the embedding table.
class Vocab {
 public:
  Vocab() = default;
  // Builds from the regular (non-special) symbol list.
  explicit Vocab(std::vector<std::string> regular_symbols);

  int Size() const { return static_cast<int>(symbols_.size()); }
  int NumRegular() const { return Size() - 2; }
  int ScId() const { return Size() - 2; }
  int EosId() const { return Size() - 1; }
  int SosId() const { return Size(); }

  const std::string& Symbol(int id) const;
  // Throws InputError for symbols outside the vocabulary.
  int Id(const std::string& symbol) const;
  bool Contains(const std::string& symbol) const;

  std::vector<int> Encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> Decode(const std::vector<int>& ids) const;

  const std::vector<std::string>& Symbols() const { return symbols_; }
  // Regular symbols only (no specials).
  std::vector<std::string> RegularSymbols() const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace sotkit

#endif  // SOTKIT_VOCAB_H_

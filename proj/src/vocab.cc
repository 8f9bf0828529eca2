// sotkit/vocab.cc

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

#include "sotkit/vocab.h"

#include "sotkit/common.h"

namespace sotkit {

Vocab::Vocab(std::vector<std::string> regular_symbols) {
  symbols_ = std::move(regular_symbols);
  for (const std::string& s : symbols_) {
    if (s == kSpeakerChangeSymbol || s == kEosSymbol || s == kSosSymbol)
      throw ConfigError("Vocab: regular symbol collides with special: " + s);
  }
  symbols_.push_back(kSpeakerChangeSymbol);
  symbols_.push_back(kEosSymbol);
  for (int i = 0; i < static_cast<int>(symbols_.size()); ++i) {
    if (!index_.emplace(symbols_[i], i).second)
      throw ConfigError("Vocab: duplicate symbol: " + symbols_[i]);
  }
}

const std::string& Vocab::Symbol(int id) const {
  if (id < 0 || id >= Size())
    throw ContractError("Vocab::Symbol: id out of range");
  return symbols_[id];
}

int Vocab::Id(const std::string& symbol) const {
  auto it = index_.find(symbol);
  if (it == index_.end())
    throw InputError("Vocab: token outside vocabulary: " + symbol);
  return it->second;
}

bool Vocab::Contains(const std::string& symbol) const {
  return index_.count(symbol) > 0;
}

std::vector<int> Vocab::Encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(Id(t));
  return ids;
}

std::vector<std::string> Vocab::Decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(Symbol(id));
  return out;
}

std::vector<std::string> Vocab::RegularSymbols() const {
  return std::vector<std::string>(symbols_.begin(), symbols_.end() - 2);
}

}  // namespace sotkit

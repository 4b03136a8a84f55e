// Copyright 2026 The Derail Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "derail/textnorm.h"

#include <cctype>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>

#include "derail/errors.h"
#include "derail/hashing.h"

namespace derail {
namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool IsPunct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

// Lowercases ASCII letters outside occurrences of the replacement literals.
void AppendLowered(std::string_view text, std::string& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (text.substr(i, kUserToken.size()) == kUserToken) {
      out.append(kUserToken);
      i += kUserToken.size();
    } else if (text.substr(i, kUrlToken.size()) == kUrlToken) {
      out.append(kUrlToken);
      i += kUrlToken.size();
    } else {
      out.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(text[i]))));
      ++i;
    }
  }
}

const std::regex& ReplacementPattern() {
  // Group 1: scheme-prefixed or www.-prefixed URL. Group 2: @-mention.
  static const std::regex re(
      R"(((?:[A-Za-z][A-Za-z0-9+.\-]*://|[Ww][Ww][Ww]\.)[^\s]+)|(@[A-Za-z0-9_]+))");
  return re;
}

}  // namespace

std::string Normalize(std::string_view text) {
  std::string replaced;
  replaced.reserve(text.size());
  const std::string input(text);
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(input.begin(), input.end(),
                                      ReplacementPattern());
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    AppendLowered(std::string_view(input).substr(
                      last, static_cast<std::size_t>(m.position()) - last),
                  replaced);
    replaced.append(m[1].matched ? kUrlToken : kUserToken);
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  AppendLowered(std::string_view(input).substr(last), replaced);

  std::string out;
  out.reserve(replaced.size());
  bool pending_space = false;
  for (char c : replaced) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> Tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && IsSpace(normalized[i])) ++i;
    std::size_t j = i;
    while (j < normalized.size() && !IsSpace(normalized[j])) ++j;
    if (j == i) break;
    std::string_view chunk = normalized.substr(i, j - i);
    i = j;

    if (chunk.size() > 1 && chunk.front() == '#') {
      tokens.emplace_back(chunk);
      continue;
    }
    while (!chunk.empty() && IsPunct(chunk.front()) &&
           !chunk.starts_with(kUserToken)) {
      if (chunk.size() > 1 && chunk.front() == '#') break;
      tokens.emplace_back(1, chunk.front());
      chunk.remove_prefix(1);
    }
    if (chunk.size() > 1 && chunk.front() == '#') {
      tokens.emplace_back(chunk);
      continue;
    }
    std::vector<std::string> trailing;
    while (!chunk.empty() && IsPunct(chunk.back())) {
      trailing.emplace_back(1, chunk.back());
      chunk.remove_suffix(1);
    }
    if (!chunk.empty()) tokens.emplace_back(chunk);
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
  }
  return tokens;
}

Vocabulary::Vocabulary() {
  for (std::string_view t : {kClsToken, kSepToken, kUnkToken, kPadToken}) {
    Add(std::string(t));
  }
}

void Vocabulary::Add(const std::string& token) {
  if (token_to_id_.contains(token)) return;
  token_to_id_.emplace(token, static_cast<TokenId>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

Vocabulary Vocabulary::Build(
    const std::vector<std::vector<std::string>>& docs) {
  Vocabulary vocab;
  for (const auto& doc : docs) {
    for (const auto& token : doc) vocab.Add(token);
  }
  return vocab;
}

Vocabulary Vocabulary::Load(std::istream& in) {
  Vocabulary vocab;
  vocab.token_to_id_.clear();
  vocab.id_to_token_.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_of(" \t\r") != std::string::npos) {
      throw ParseError("vocabulary token must be nonempty without whitespace",
                       line_no);
    }
    if (vocab.token_to_id_.contains(line)) {
      throw ParseError("duplicate vocabulary token '" + line + "'", line_no);
    }
    vocab.Add(line);
  }
  const std::string_view reserved[] = {kClsToken, kSepToken, kUnkToken,
                                       kPadToken};
  for (TokenId id = 0; id < kNumReserved; ++id) {
    if (static_cast<std::size_t>(id) >= vocab.size() ||
        vocab.id_to_token_[id] != reserved[id]) {
      throw ParseError("reserved token '" + std::string(reserved[id]) +
                           "' expected",
                       static_cast<std::size_t>(id) + 1);
    }
  }
  return vocab;
}

void Vocabulary::Save(std::ostream& out) const {
  for (const auto& token : id_to_token_) out << token << '\n';
}

TokenId Vocabulary::Encode(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

std::vector<TokenId> Vocabulary::Encode(
    const std::vector<std::string>& tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(Encode(t));
  return ids;
}

const std::string& Vocabulary::Decode(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw NotFoundError("token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[id];
}

bool Vocabulary::Contains(std::string_view token) const {
  return token_to_id_.contains(std::string(token));
}

std::string Vocabulary::Hash() const {
  std::ostringstream out;
  Save(out);
  return HexDigest(Fnv1a64(out.str()));
}

void ContextAssemblyConfig::Validate() const {
  if (max_len < 2) throw ConfigError("context.max_len", "must be >= 2");
}

std::vector<TokenId> AssembleContext(const std::vector<std::string>& recent,
                                     const std::vector<std::string>& prior,
                                     const Vocabulary& vocab,
                                     const ContextAssemblyConfig& cfg) {
  cfg.Validate();
  if (recent.empty() && prior.empty()) throw Error("empty context");
  const auto& first = cfg.most_recent_first ? recent : prior;
  const auto& second = cfg.most_recent_first ? prior : recent;
  const auto limit = static_cast<std::size_t>(cfg.max_len);

  std::vector<TokenId> ids;
  ids.reserve(limit);
  ids.push_back(kClsId);
  for (const auto& t : first) {
    if (ids.size() == limit) return ids;
    ids.push_back(vocab.Encode(t));
  }
  if (cfg.include_separator) {
    if (ids.size() == limit) return ids;
    ids.push_back(kSepId);
  }
  for (const auto& t : second) {
    if (ids.size() == limit) return ids;
    ids.push_back(vocab.Encode(t));
  }
  return ids;
}

}  // namespace derail

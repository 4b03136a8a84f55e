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

#ifndef DERAIL_TEXTNORM_H_
#define DERAIL_TEXTNORM_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace derail {

using TokenId = std::int32_t;

inline constexpr TokenId kClsId = 0;
inline constexpr TokenId kSepId = 1;
inline constexpr TokenId kUnkId = 2;
inline constexpr TokenId kPadId = 3;
inline constexpr TokenId kNumReserved = 4;

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "</s>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kPadToken = "<pad>";

inline constexpr std::string_view kUserToken = "@USER";
inline constexpr std::string_view kUrlToken = "HTTPURL";

// Replaces @-mentions with "@USER" and URLs with "HTTPURL", lowercases
// everything else (ASCII only) and collapses whitespace. Idempotent.
std::string Normalize(std::string_view text);

// Whitespace split followed by peeling of leading/trailing ASCII punctuation
// into single-character tokens. "@USER", "HTTPURL" and "#tag" are atomic.
std::vector<std::string> Tokenize(std::string_view normalized);

// Word-level vocabulary. Ids 0..3 are CLS, SEP, UNK, PAD in that order.
class Vocabulary {
 public:
  Vocabulary();

  // Reserved tokens plus every distinct token, ids in first-seen order.
  static Vocabulary Build(const std::vector<std::vector<std::string>>& docs);

  // One token per line, line index == id. The first four lines must be the
  // reserved tokens.
  static Vocabulary Load(std::istream& in);
  void Save(std::ostream& out) const;

  TokenId Encode(std::string_view token) const;
  std::vector<TokenId> Encode(const std::vector<std::string>& tokens) const;
  const std::string& Decode(TokenId id) const;
  bool Contains(std::string_view token) const;

  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // FNV-1a of the serialized form.
  std::string Hash() const;

 private:
  void Add(const std::string& token);

  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
};

struct ContextAssemblyConfig {
  int max_len = 130;
  bool most_recent_first = true;
  bool include_separator = true;

  void Validate() const;
};

// [CLS] + recent + [</s>] + prior, cut from the end at cfg.max_len. With
// most_recent_first == false the two tweets swap places.
std::vector<TokenId> AssembleContext(const std::vector<std::string>& recent,
                                     const std::vector<std::string>& prior,
                                     const Vocabulary& vocab,
                                     const ContextAssemblyConfig& cfg);

}  // namespace derail

#endif  // DERAIL_TEXTNORM_H_

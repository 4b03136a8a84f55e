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

#ifndef DERAIL_CORPUS_H_
#define DERAIL_CORPUS_H_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "derail/textnorm.h"

namespace derail {

struct Tweet {
  std::string id;
  std::string conversation_id;
  std::optional<std::string> reply_to_id;
  std::string author_id;
  std::string text;
  std::optional<int> label;  // 1 = attack, 0 = none.
};

// A root-to-leaf reply path. tweets[0] is the top-level tweet and each later
// tweet replies to its predecessor.
struct ConversationBranch {
  std::string id;
  std::vector<Tweet> tweets;
};

// One forecasting row: the two tweets preceding `target_id` and its label.
struct ContextExample {
  std::string target_id;
  std::vector<TokenId> context_token_ids;
  // (most recent, second most recent), normalized.
  std::array<std::string, 2> raw_context_texts;
  int label = 0;
  bool synthetic = false;
  // Set on synthetic rows: the target_id of the example they were derived
  // from.
  std::optional<std::string> source_id;
};

// Parses the JSON-lines corpus. Blank lines are skipped; line numbers in
// errors are 1-based.
std::vector<Tweet> ParseCorpus(std::istream& in);

// Expands every conversation's reply tree into all root-to-leaf paths.
// Conversations keep first-seen order; children are visited in input order.
std::vector<ConversationBranch> ThreadBranches(const std::vector<Tweet>& tweets);

// Builds token ids from (most recent, second most recent) normalized texts.
using ContextEncoder = std::function<std::vector<TokenId>(
    const std::string& recent, const std::string& prior)>;

// One example per labeled tweet with at least two predecessors in the branch.
// When `encoder` is empty the token ids are left empty for a later
// EncodeExamples pass.
std::vector<ContextExample> ExtractExamples(const ConversationBranch& branch,
                                            const ContextEncoder& encoder = {});

// Encoder that tokenizes both texts and assembles them against `vocab`.
ContextEncoder MakeContextEncoder(const Vocabulary& vocab,
                                  const ContextAssemblyConfig& cfg);

// Recomputes context_token_ids from raw_context_texts.
void EncodeExamples(std::vector<ContextExample>& examples,
                    const ContextEncoder& encoder);

struct SplitFractions {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;

  void Validate() const;
};

struct SplitResult {
  std::vector<ContextExample> train;
  std::vector<ContextExample> val;
  std::vector<ContextExample> test;
  std::vector<std::string> warnings;
};

// Splits each label class independently (floor rounding, remainder to
// train). Classes with fewer than 3 members go entirely to train. Each split
// keeps input order.
SplitResult StratifiedSplit(const std::vector<ContextExample>& examples,
                            const SplitFractions& fractions,
                            std::uint64_t seed);

}  // namespace derail

#endif  // DERAIL_CORPUS_H_

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

#include "derail/corpus.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "derail/errors.h"
#include "json.hpp"

namespace derail {
namespace {

using nlohmann::json;

std::string RequireString(const json& record, const char* key,
                          std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) {
    throw ParseError(std::string("field '") + key + "' must be a string",
                     line);
  }
  return it->get<std::string>();
}

std::optional<std::string> OptionalString(const json& record, const char* key,
                                          std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ParseError(std::string("field '") + key + "' must be string or null",
                     line);
  }
  return it->get<std::string>();
}

bool IsBlank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

}  // namespace

std::vector<Tweet> ParseCorpus(std::istream& in) {
  std::vector<Tweet> tweets;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!record.is_object()) throw ParseError("expected an object", line_no);

    Tweet t;
    t.id = RequireString(record, "id", line_no);
    t.conversation_id = RequireString(record, "conversation_id", line_no);
    t.reply_to_id = OptionalString(record, "reply_to_id", line_no);
    t.author_id = OptionalString(record, "author_id", line_no).value_or("");
    t.text = RequireString(record, "text", line_no);
    if (auto it = record.find("label"); it != record.end() && !it->is_null()) {
      if (!it->is_number_integer() || (*it != 0 && *it != 1)) {
        throw ParseError("field 'label' must be 0, 1 or null", line_no);
      }
      t.label = it->get<int>();
    }

    if (t.id.empty()) throw IntegrityError("empty id at line " +
                                           std::to_string(line_no));
    if (IsBlank(t.text)) {
      throw IntegrityError("empty text for id '" + t.id + "'");
    }
    if (!seen.insert(t.id).second) {
      throw IntegrityError("duplicate id '" + t.id + "' at line " +
                           std::to_string(line_no));
    }
    tweets.push_back(std::move(t));
  }
  return tweets;
}

std::vector<ConversationBranch> ThreadBranches(
    const std::vector<Tweet>& tweets) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    if (!index.emplace(tweets[i].id, i).second) {
      throw IntegrityError("duplicate id '" + tweets[i].id + "'");
    }
  }

  std::vector<std::vector<std::size_t>> children(tweets.size());
  std::vector<std::string> conversation_order;
  std::map<std::string, std::vector<std::size_t>> roots;
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    const Tweet& t = tweets[i];
    if (!roots.contains(t.conversation_id)) {
      conversation_order.push_back(t.conversation_id);
      roots[t.conversation_id];
    }
    if (!t.reply_to_id) {
      roots[t.conversation_id].push_back(i);
      continue;
    }
    auto parent = index.find(*t.reply_to_id);
    if (parent == index.end()) {
      throw IntegrityError("tweet '" + t.id + "' replies to unknown id '" +
                           *t.reply_to_id + "'");
    }
    if (tweets[parent->second].conversation_id != t.conversation_id) {
      throw IntegrityError("tweet '" + t.id +
                           "' replies across conversations");
    }
    children[parent->second].push_back(i);
  }

  std::vector<ConversationBranch> branches;
  std::vector<bool> visited(tweets.size(), false);
  for (const auto& conversation : conversation_order) {
    for (std::size_t root : roots[conversation]) {
      // Iterative DFS; `path` holds the current root-to-node chain and
      // `next_child` the position in each node's child list.
      std::vector<std::size_t> path{root};
      std::vector<std::size_t> next_child{0};
      visited[root] = true;
      while (!path.empty()) {
        std::size_t node = path.back();
        if (children[node].empty()) {
          ConversationBranch branch;
          branch.id = conversation + ":" + tweets[node].id;
          for (std::size_t i : path) branch.tweets.push_back(tweets[i]);
          branches.push_back(std::move(branch));
        }
        if (next_child.back() < children[node].size()) {
          std::size_t child = children[node][next_child.back()++];
          visited[child] = true;
          path.push_back(child);
          next_child.push_back(0);
        } else {
          path.pop_back();
          next_child.pop_back();
        }
      }
    }
  }
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    // With every parent resolved, a node unreachable from any root sits on a
    // reply cycle or hangs below one.
    if (!visited[i]) {
      throw IntegrityError("reply cycle involving tweet '" + tweets[i].id +
                           "'");
    }
  }
  return branches;
}

std::vector<ContextExample> ExtractExamples(const ConversationBranch& branch,
                                            const ContextEncoder& encoder) {
  std::vector<ContextExample> examples;
  for (std::size_t i = 2; i < branch.tweets.size(); ++i) {
    const Tweet& target = branch.tweets[i];
    if (!target.label) continue;
    ContextExample ex;
    ex.target_id = target.id;
    ex.raw_context_texts = {Normalize(branch.tweets[i - 1].text),
                            Normalize(branch.tweets[i - 2].text)};
    ex.label = *target.label;
    if (encoder) {
      ex.context_token_ids =
          encoder(ex.raw_context_texts[0], ex.raw_context_texts[1]);
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

ContextEncoder MakeContextEncoder(const Vocabulary& vocab,
                                  const ContextAssemblyConfig& cfg) {
  cfg.Validate();
  return [&vocab, cfg](const std::string& recent, const std::string& prior) {
    return AssembleContext(Tokenize(recent), Tokenize(prior), vocab, cfg);
  };
}

void EncodeExamples(std::vector<ContextExample>& examples,
                    const ContextEncoder& encoder) {
  for (auto& ex : examples) {
    ex.context_token_ids =
        encoder(ex.raw_context_texts[0], ex.raw_context_texts[1]);
  }
}

void SplitFractions::Validate() const {
  if (train < 0 || val < 0 || test < 0) {
    throw ConfigError("split", "fractions must be nonnegative");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split", "fractions must sum to 1");
  }
}

SplitResult StratifiedSplit(const std::vector<ContextExample>& examples,
                            const SplitFractions& fractions,
                            std::uint64_t seed) {
  fractions.Validate();
  if (examples.empty()) throw Error("cannot split an empty example list");

  // 0 = train, 1 = val, 2 = test.
  std::vector<int> assignment(examples.size(), 0);
  std::mt19937_64 rng(seed);
  for (int label : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (examples[i].label == label) members.push_back(i);
    }
    if (members.size() < 3) continue;
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = static_cast<double>(members.size());
    const auto n_val = static_cast<std::size_t>(std::floor(fractions.val * n));
    const auto n_test =
        static_cast<std::size_t>(std::floor(fractions.test * n));
    for (std::size_t k = 0; k < n_val; ++k) assignment[members[k]] = 1;
    for (std::size_t k = n_val; k < n_val + n_test; ++k) {
      assignment[members[k]] = 2;
    }
  }

  SplitResult result;
  for (int label : {0, 1}) {
    const auto count = std::count_if(
        examples.begin(), examples.end(),
        [label](const ContextExample& e) { return e.label == label; });
    if (count > 0 && count < 3) {
      result.warnings.push_back("class " + std::to_string(label) + " has " +
                                std::to_string(count) +
                                " members; all assigned to train");
    }
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto& bucket = assignment[i] == 0   ? result.train
                   : assignment[i] == 1 ? result.val
                                        : result.test;
    bucket.push_back(examples[i]);
  }
  return result;
}

}  // namespace derail

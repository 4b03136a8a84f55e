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

#include "derail/toy_corpus.h"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "derail/errors.h"
#include "json.hpp"

namespace derail {
namespace {

constexpr const char* kSyllables[] = {"ba", "ko", "ti", "lu", "me", "ra",
                                      "so", "vi", "ne", "da", "pu", "ge"};
constexpr const char* kFunctionWords[] = {"the", "and", "you", "is", "to",
                                          "of",  "that", "this", "we", "it"};

std::string MakeWord(int n) {
  // Distinct three-syllable words: base-12 digits of n + 12^2 offsets.
  constexpr int kBase = static_cast<int>(std::size(kSyllables));
  std::string w;
  int v = n + kBase * kBase;
  while (v > 0) {
    w += kSyllables[v % kBase];
    v /= kBase;
  }
  return w;
}

}  // namespace

ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& cfg) {
  if (cfg.num_conversations < 1 || cfg.tweets_per_conversation < 3 ||
      cfg.min_words < 1 || cfg.max_words < cfg.min_words ||
      !(cfg.positive_rate > 0.0 && cfg.positive_rate < 1.0)) {
    throw Error("invalid toy corpus configuration");
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  ToyCorpus corpus;
  std::vector<std::string> content;
  for (int c = 0; c < cfg.num_clusters; ++c) {
    std::vector<double> center(static_cast<std::size_t>(cfg.embedding_dim));
    for (double& x : center) x = normal(rng);
    for (int m = 0; m < cfg.cluster_size; ++m) {
      std::string word = MakeWord(c * cfg.cluster_size + m);
      std::vector<double> v = center;
      for (double& x : v) x += 0.15 * normal(rng);
      corpus.embeddings.Insert(word, v);
      content.push_back(word);
    }
  }
  std::vector<double> trigger_vec(static_cast<std::size_t>(cfg.embedding_dim));
  for (double& x : trigger_vec) x = 3.0 * normal(rng);
  corpus.embeddings.Insert(cfg.trigger, trigger_vec);

  // Per-tweet planting probability giving the requested positive rate.
  const double plant =
      cfg.placement == ToyCorpusConfig::Placement::kEither
          ? 1.0 - std::sqrt(1.0 - cfg.positive_rate)
          : cfg.positive_rate;

  std::uniform_int_distribution<int> length(cfg.min_words, cfg.max_words);
  std::uniform_int_distribution<std::size_t> pick_content(0, content.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_function(
      0, std::size(kFunctionWords) - 1);

  for (int conv = 0; conv < cfg.num_conversations; ++conv) {
    const std::string conv_id = "c" + std::to_string(conv);
    std::vector<bool> has_trigger;
    for (int i = 0; i < cfg.tweets_per_conversation; ++i) {
      const int n = length(rng);
      std::vector<std::string> words;
      for (int w = 0; w < n; ++w) {
        const double r = unit(rng);
        if (r < 0.25) {
          words.emplace_back(kFunctionWords[pick_function(rng)]);
        } else if (r < 0.28) {
          words.push_back("@user" + std::to_string(conv % 17));
        } else if (r < 0.30) {
          words.push_back("https://t.co/" + MakeWord(w + i));
        } else if (r < 0.32) {
          words.push_back("#" + content[pick_content(rng)]);
        } else {
          words.push_back(content[pick_content(rng)]);
        }
      }
      const bool planted = unit(rng) < plant;
      if (planted) {
        std::uniform_int_distribution<std::size_t> at(0, words.size());
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(at(rng)),
                     cfg.trigger);
      }
      has_trigger.push_back(planted);

      Tweet t;
      t.id = conv_id + "t" + std::to_string(i);
      t.conversation_id = conv_id;
      if (i > 0) t.reply_to_id = conv_id + "t" + std::to_string(i - 1);
      t.author_id = "u" + std::to_string((conv + i) % 2);
      for (const auto& w : words) {
        if (!t.text.empty()) t.text.push_back(' ');
        t.text += w;
      }
      if (i % 3 == 2) t.text += ".";
      if (i >= 2) {
        const bool older = has_trigger[static_cast<std::size_t>(i - 2)];
        const bool recent = has_trigger[static_cast<std::size_t>(i - 1)];
        t.label = cfg.placement == ToyCorpusConfig::Placement::kEither
                      ? static_cast<int>(older || recent)
                      : static_cast<int>(older);
      }
      corpus.tweets.push_back(std::move(t));
    }
  }
  return corpus;
}

void WriteCorpus(std::ostream& out, const std::vector<Tweet>& tweets) {
  for (const auto& t : tweets) {
    nlohmann::json j = {{"id", t.id},
                        {"conversation_id", t.conversation_id},
                        {"reply_to_id", nullptr},
                        {"author_id", t.author_id},
                        {"text", t.text},
                        {"label", nullptr}};
    if (t.reply_to_id) j["reply_to_id"] = *t.reply_to_id;
    if (t.label) j["label"] = *t.label;
    out << j.dump() << '\n';
  }
}

void WriteEmbeddings(std::ostream& out, const EmbeddingTable& table) {
  char buf[32];
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.words()[i];
    for (double v : table.Row(i)) {
      std::snprintf(buf, sizeof(buf), " %.6f", v);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace derail

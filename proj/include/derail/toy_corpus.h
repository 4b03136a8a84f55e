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

#ifndef DERAIL_TOY_CORPUS_H_
#define DERAIL_TOY_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "derail/corpus.h"
#include "derail/embedding_store.h"

namespace derail {

// Synthetic conversations with a planted trigger word. A labeled tweet is an
// attack exactly when the trigger occurs in one of its context tweets
// (kEither) or in the older one (kOlderOnly).
struct ToyCorpusConfig {
  enum class Placement { kEither, kOlderOnly };

  int num_conversations = 600;
  int tweets_per_conversation = 6;
  double positive_rate = 0.3;
  Placement placement = Placement::kEither;
  std::string trigger = "moron";
  int min_words = 4;
  int max_words = 10;
  int num_clusters = 30;
  int cluster_size = 4;
  int embedding_dim = 25;
  std::uint64_t seed = 0;
};

struct ToyCorpus {
  std::vector<Tweet> tweets;
  EmbeddingTable embeddings;
};

ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& cfg);

// Writes tweets in the JSON-lines corpus schema.
void WriteCorpus(std::ostream& out, const std::vector<Tweet>& tweets);

// Writes the table in the GloVe text layout.
void WriteEmbeddings(std::ostream& out, const EmbeddingTable& table);

}  // namespace derail

#endif  // DERAIL_TOY_CORPUS_H_

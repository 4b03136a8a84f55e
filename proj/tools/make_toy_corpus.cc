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

// Writes a synthetic trigger-word corpus, a matching embedding file and a
// pipeline config into an output directory, for trying the CLI end to end.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "derail/toy_corpus.h"
#include "json.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a toy derailment corpus", "make_toy_corpus"};
  std::string out_dir;
  derail::ToyCorpusConfig cfg;
  bool older_only = false;
  app.add_option("out_dir", out_dir, "Output directory")->required();
  app.add_option("--conversations", cfg.num_conversations, "Conversations");
  app.add_option("--length", cfg.tweets_per_conversation,
                 "Tweets per conversation");
  app.add_option("--seed", cfg.seed, "Generator seed");
  app.add_flag("--older-only", older_only,
               "Plant the trigger only in the older context tweet");
  CLI11_PARSE(app, argc, argv);
  if (older_only) cfg.placement = derail::ToyCorpusConfig::Placement::kOlderOnly;

  try {
    const auto corpus = derail::GenerateToyCorpus(cfg);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    {
      std::ofstream out(dir / "corpus.jsonl");
      derail::WriteCorpus(out, corpus.tweets);
    }
    {
      std::ofstream out(dir / "embeddings.txt");
      derail::WriteEmbeddings(out, corpus.embeddings);
    }
    const nlohmann::json config = {
        {"paths",
         {{"corpus", "corpus.jsonl"},
          {"embeddings", "embeddings.txt"},
          {"workdir", "work"}}},
        {"seed", 13},
        {"oversample_mode", "synthetic"},
    };
    std::ofstream(dir / "config.json") << config.dump(2) << "\n";
    std::cout << "wrote " << corpus.tweets.size() << " tweets and "
              << corpus.embeddings.size() << " embeddings to " << dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "make_toy_corpus: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

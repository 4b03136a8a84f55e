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

#ifndef DERAIL_PIPELINE_H_
#define DERAIL_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "derail/corpus.h"
#include "derail/encoder_model.h"
#include "derail/oversample.h"
#include "derail/textnorm.h"
#include "json.hpp"

namespace derail {

enum class OversampleMode { kNone, kRandom, kSynthetic };

std::string ToString(OversampleMode mode);
OversampleMode ParseOversampleMode(const std::string& name);

// Everything one experiment needs. Stage seeds are derived from `seed`.
struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path embeddings;
  std::filesystem::path stopwords;  // empty: built-in list
  std::filesystem::path workdir;

  SplitFractions split;
  std::uint64_t seed = 13;
  ContextAssemblyConfig context;
  SyntheticConfig synthetic;
  ModelConfig model;
  TrainConfig train;
  OversampleMode oversample_mode = OversampleMode::kNone;
  double threshold = 0.5;
  int neighbor_threads = 1;

  // Missing keys keep their defaults; unknown keys are rejected. Relative
  // paths resolve against `base_dir`.
  static PipelineConfig FromJson(const nlohmann::json& j,
                                 const std::filesystem::path& base_dir = {});
  static PipelineConfig Load(const std::filesystem::path& path);

  nlohmann::json ToJson() const;
  // FNV-1a of the canonical JSON form, leaving out the workdir.
  std::string Hash() const;
  void Validate() const;
};

// Fixed workdir layout.
struct Workdir {
  std::filesystem::path root;

  std::filesystem::path examples_dir() const { return root / "examples"; }
  std::filesystem::path split_file(const std::string& split) const {
    return examples_dir() / (split + ".jsonl");
  }
  std::filesystem::path train_file(OversampleMode mode) const;
  std::filesystem::path vocab_file() const { return examples_dir() / "vocab.txt"; }
  std::filesystem::path neighbors_file() const {
    return examples_dir() / "neighbors.jsonl";
  }
  std::filesystem::path model_dir() const { return root / "model"; }
  std::filesystem::path checkpoint_file() const {
    return model_dir() / "checkpoint.bin";
  }
  std::filesystem::path trace_file() const { return model_dir() / "trace.csv"; }
  std::filesystem::path reports_dir() const { return root / "reports"; }
};

// Held for the duration of one command; a second holder fails with Error.
class WorkdirLock {
 public:
  explicit WorkdirLock(const std::filesystem::path& workdir);
  ~WorkdirLock();
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Example files: a {"meta": ...} first line, then one object per example with
// "target_id", "context" ([recent, prior]), "context_token_ids", "label",
// "synthetic" and "source_id".
void WriteExamples(const std::filesystem::path& path,
                   const std::vector<ContextExample>& examples,
                   const nlohmann::json& meta);
std::vector<ContextExample> ReadExamples(const std::filesystem::path& path);

struct StageSummary {
  std::vector<std::string> lines;
};

StageSummary RunIngest(const PipelineConfig& cfg);
StageSummary RunOversample(const PipelineConfig& cfg);
StageSummary RunTrain(const PipelineConfig& cfg);
// Evaluates the checkpoint on the test split and writes reports/run_<name>.*.
StageSummary RunEval(const PipelineConfig& cfg, const std::string& run_name);
// Trains base, single-tweet and no-separator models and writes
// reports/ablation.*.
StageSummary RunAblate(const PipelineConfig& cfg);
// Merges reports/run_<name>.json files (all of them, sorted, when `runs` is
// empty) into reports/report.*.
StageSummary RunReport(const PipelineConfig& cfg,
                       const std::vector<std::string>& runs);

}  // namespace derail

#endif  // DERAIL_PIPELINE_H_

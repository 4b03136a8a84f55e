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

// derail: command-line driver for the forecasting pipeline.
//
//   derail <ingest|oversample|train|eval|ablate|report> --config <path>
//          [--seed N] [--oversample none|random|synthetic] [--threshold F]
//
// DERAIL_WORKDIR overrides paths.workdir. Exit codes: 0 success, 1 config
// error, 2 usage error, 3 any other failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "derail/errors.h"
#include "derail/pipeline.h"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> oversample;
  std::optional<double> threshold;
};

void AddCommon(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Pipeline JSON config")
      ->required();
  cmd->add_option("--seed", opts.seed, "Override the master seed");
  cmd->add_option("--oversample", opts.oversample,
                  "Override oversample_mode")
      ->check(CLI::IsMember({"none", "random", "synthetic"}));
  cmd->add_option("--threshold", opts.threshold,
                  "Override the classification threshold");
}

derail::PipelineConfig ResolveConfig(const CommonOptions& opts) {
  auto cfg = derail::PipelineConfig::Load(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.oversample) {
    cfg.oversample_mode = derail::ParseOversampleMode(*opts.oversample);
  }
  if (opts.threshold) cfg.threshold = *opts.threshold;
  if (const char* env = std::getenv("DERAIL_WORKDIR"); env && *env) {
    cfg.workdir = env;
  }
  cfg.Validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversational derailment forecasting pipeline", "derail"};
  app.require_subcommand(1, 1);

  CommonOptions opts;
  std::string run_name;
  std::vector<std::string> runs;

  auto* ingest = app.add_subcommand(
      "ingest", "Parse, thread, extract and split the corpus");
  auto* oversample =
      app.add_subcommand("oversample", "Augment the training split");
  auto* train = app.add_subcommand("train", "Train and write a checkpoint");
  auto* eval = app.add_subcommand("eval", "Evaluate the checkpoint on test");
  auto* ablate = app.add_subcommand(
      "ablate", "Train base, single-tweet and no-separator models");
  auto* report = app.add_subcommand("report", "Merge evaluated runs");
  for (auto* cmd : {ingest, oversample, train, eval, ablate, report}) {
    AddCommon(cmd, opts);
  }
  eval->add_option("--name", run_name,
                   "Run name (default: the oversample mode)");
  report->add_option("runs", runs, "Run names to merge (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto cfg = ResolveConfig(opts);
    derail::WorkdirLock lock(cfg.workdir);
    derail::StageSummary summary;
    if (ingest->parsed()) {
      summary = derail::RunIngest(cfg);
    } else if (oversample->parsed()) {
      summary = derail::RunOversample(cfg);
    } else if (train->parsed()) {
      summary = derail::RunTrain(cfg);
    } else if (eval->parsed()) {
      summary = derail::RunEval(
          cfg, run_name.empty() ? derail::ToString(cfg.oversample_mode)
                                : run_name);
    } else if (ablate->parsed()) {
      summary = derail::RunAblate(cfg);
    } else {
      summary = derail::RunReport(cfg, runs);
    }
    for (const auto& line : summary.lines) {
      std::cout << line;
      if (line.empty() || line.back() != '\n') std::cout << '\n';
    }
  } catch (const derail::ConfigError& e) {
    std::cerr << "derail: config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "derail: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

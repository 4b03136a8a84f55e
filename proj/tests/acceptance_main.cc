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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "derail/checkpoint.h"
#include "derail/corpus.h"
#include "derail/embedding_store.h"
#include "derail/errors.h"
#include "derail/encoder_model.h"
#include "derail/eval_harness.h"
#include "derail/oversample.h"
#include "derail/pipeline.h"
#include "derail/textnorm.h"
#include "derail/toy_corpus.h"
#include "json.hpp"
#include "oracles.h"

namespace derail {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, double a, double b = 0, double c = 0,
                   double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("derail_accept_" + tag + "_" + std::to_string(rd()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Writes a toy corpus and its embeddings into `dir` and returns a config
// pointing at them.
PipelineConfig ToyConfig(const fs::path& dir, const ToyCorpusConfig& toy,
                         const std::string& mode, const fs::path& workdir) {
  const ToyCorpus corpus = GenerateToyCorpus(toy);
  {
    std::ofstream out(dir / "corpus.jsonl");
    WriteCorpus(out, corpus.tweets);
  }
  {
    std::ofstream out(dir / "embeddings.txt");
    WriteEmbeddings(out, corpus.embeddings);
  }
  return PipelineConfig::FromJson(
      {{"paths",
        {{"corpus", "corpus.jsonl"},
         {"embeddings", "embeddings.txt"},
         {"workdir", workdir.string()}}},
       {"oversample_mode", mode}},
      dir);
}

const json& RunNamed(const json& report, const std::string& name) {
  for (const auto& r : report["runs"]) {
    if (r["name"] == name) return r;
  }
  throw Error("run '" + name + "' missing from report");
}

Outcome AuprOracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_int_distribution<int> levels(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    // Few distinct score levels force ties.
    std::uniform_int_distribution<int> level(0, levels(rng));
    std::bernoulli_distribution positive(0.4);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = level(rng) / 7.0;
      labels[i] = positive(rng);
    }
    labels[std::uniform_int_distribution<int>(0, n - 1)(rng)] = 1;
    const double got = ComputePRCurve(scores, labels).aupr;
    worst = std::max(worst, std::abs(got - oracle::BruteForceAP(scores, labels)));
  }
  return {worst <= 1e-9, Format("max |AUPR - oracle| = %.3g over 1000 instances", worst)};
}

Outcome MetricDefinitions() {
  struct Fixture {
    ConfusionCounts c;
    // Exact rationals: accuracy, precision, recall, f1 as numerator/denominator.
    int an, ad, pn, pd, rn, rd, fn, fd;
  };
  const Fixture fixtures[] = {
      {{3, 1, 2, 4}, 7, 10, 3, 4, 3, 5, 2, 3},
      {{5, 0, 0, 5}, 1, 1, 1, 1, 1, 1, 1, 1},
      {{1, 1, 1, 1}, 1, 2, 1, 2, 1, 2, 1, 2},
      {{0, 0, 0, 4}, 1, 1, 0, 1, 0, 1, 0, 1},
      {{0, 0, 3, 1}, 1, 4, 0, 1, 0, 1, 0, 1},
      {{0, 2, 0, 3}, 3, 5, 0, 1, 0, 1, 0, 1},
      {{0, 2, 2, 0}, 0, 1, 0, 1, 0, 1, 0, 1},
      {{4, 0, 0, 0}, 1, 1, 1, 1, 1, 1, 1, 1},
      {{0, 5, 0, 0}, 0, 1, 0, 1, 0, 1, 0, 1},
      {{0, 0, 6, 0}, 0, 1, 0, 1, 0, 1, 0, 1},
      {{2, 0, 2, 6}, 8, 10, 1, 1, 1, 2, 2, 3},
      {{2, 2, 0, 6}, 8, 10, 1, 2, 1, 1, 2, 3},
      {{1, 3, 0, 0}, 1, 4, 1, 4, 1, 1, 2, 5},
      {{1, 0, 3, 0}, 1, 4, 1, 1, 1, 4, 2, 5},
      {{6, 2, 3, 9}, 15, 20, 3, 4, 2, 3, 12, 17},
      {{10, 5, 5, 80}, 90, 100, 2, 3, 2, 3, 2, 3},
      {{1, 9, 9, 1}, 2, 20, 1, 10, 1, 10, 1, 10},
      {{7, 1, 1, 1}, 8, 10, 7, 8, 7, 8, 7, 8},
      {{3, 6, 1, 0}, 3, 10, 1, 3, 3, 4, 6, 13},
      {{9, 1, 0, 90}, 99, 100, 9, 10, 1, 1, 18, 19},
  };
  int matched = 0;
  int index = 0;
  std::string first_miss;
  for (const auto& f : fixtures) {
    ++index;
    const PointMetrics m = ComputePointMetrics(f.c);
    auto same = [](double got, int num, int den) {
      const double want = static_cast<double>(num) / den;
      // Two ulps of slack for the division order inside the harmonic mean.
      return std::abs(got - want) <=
             2 * std::numeric_limits<double>::epsilon() * std::max(1.0, want);
    };
    if (same(m.accuracy, f.an, f.ad) && same(m.precision, f.pn, f.pd) &&
        same(m.recall, f.rn, f.rd) && same(m.f1, f.fn, f.fd)) {
      ++matched;
    } else if (first_miss.empty()) {
      first_miss = " (first mismatch: fixture " + std::to_string(index) + ")";
    }
  }
  return {matched == 20, std::to_string(matched) +
                             "/20 fixtures match hand-computed rationals" +
                             first_miss};
}

Outcome GradientCheck() {
  ModelConfig cfg;
  cfg.num_layers = 1;
  cfg.num_heads = 1;
  cfg.hidden = 8;
  cfg.vocab_size = 20;
  cfg.max_len = 5;
  cfg.dropout = 0.0;
  ModelParams params = InitParams(cfg, 17);
  std::mt19937_64 rng(18);
  std::normal_distribution<double> noise(0.0, 0.3);
  params.ForEachTensor([&](const std::string&, Matrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += noise(rng);
  });
  const std::vector<TokenId> ids = {kClsId, 7, 12, kSepId, 19};
  double worst = 0.0;
  std::string worst_name;
  for (int label : {0, 1}) {
    ModelParams grads = ModelParams::ZerosLike(params);
    ForwardBackward(params, ids, label, &grads);
    const auto errors = oracle::FiniteDifferenceCheck(
        params, grads,
        [&](const ModelParams& p) { return ForwardBackward(p, ids, label, nullptr); },
        1e-5);
    for (const auto& e : errors) {
      if (e.max_rel_error > worst) {
        worst = e.max_rel_error;
        worst_name = e.name;
      }
    }
  }
  return {worst < 1e-4, Format("max relative error %.3g", worst) + " (" +
                            worst_name + ") over all parameter groups"};
}

Outcome Learnability() {
  ScratchDir dir("learn");
  ToyCorpusConfig toy;
  toy.seed = 1;
  PipelineConfig cfg = ToyConfig(dir.path(), toy, "none", "work");
  cfg.Validate();
  RunIngest(cfg);
  RunOversample(cfg);
  RunTrain(cfg);
  RunEval(cfg, "base");
  const json report = json::parse(Slurp(dir.path() / "work/reports/run_base.json"));
  const json& run = RunNamed(report, "base");
  const double acc = run["accuracy"].get<double>();
  const double aupr = run["aupr"].get<double>();
  const bool config_ok = cfg.train.max_epochs <= 4 && cfg.train.batch_size == 10 &&
                         cfg.train.learning_rate == 5e-5;
  return {config_ok && acc >= 0.95 && aupr >= 0.95,
          Format("test accuracy %.4f, AUPR %.4f (600 conversations, batch %g, lr %g)",
                 acc, aupr, cfg.train.batch_size, cfg.train.learning_rate)};
}

Outcome OversamplingStatistics() {
  NeighborIndex index;
  std::vector<std::string> eligible;
  for (int i = 0; i < 10; ++i) {
    const std::string w = "word" + std::string(1, static_cast<char>('a' + i));
    eligible.push_back(w);
    index.neighbors[w] = {{w + "1", 0.1}, {w + "2", 0.2}, {w + "3", 0.3}};
  }
  SyntheticConfig cfg;
  cfg.p_replace = 0.2;
  index.neighbors["the"] = {{"a", 0.1}};
  std::vector<std::string> tokens = {"[CLS]", "the", "@USER", "HTTPURL", "</s>",
                                     "and", "<unk>"};
  tokens.insert(tokens.begin() + 2, eligible.begin(), eligible.end());

  Rng rng(202);
  long replaced = 0;
  int preserved_violations = 0;
  constexpr int kRuns = 10000;
  for (int run = 0; run < kRuns; ++run) {
    const auto out = SynthesizeTokens(tokens, index, cfg, rng);
    if (out.size() != tokens.size()) {
      ++preserved_violations;
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const bool is_eligible =
          std::find(eligible.begin(), eligible.end(), tokens[i]) != eligible.end();
      if (is_eligible) {
        replaced += out[i] != tokens[i];
      } else if (out[i] != tokens[i]) {
        ok = false;
      }
    }
    preserved_violations += !ok;
  }
  const double mean = static_cast<double>(replaced) / kRuns;

  const std::vector<Neighbor> three = {{"n1", 1}, {"n2", 2}, {"n3", 3}};
  int counts[3] = {0, 0, 0};
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    const std::string w = SampleNeighbor(three, cfg.rank_weights, rng);
    ++counts[w[1] - '1'];
  }
  double max_dev = 0.0;
  const double expected[3] = {0.5, 0.3, 0.2};
  for (int r = 0; r < 3; ++r) {
    max_dev = std::max(max_dev,
                       std::abs(static_cast<double>(counts[r]) / kDraws - expected[r]));
  }
  const bool pass = mean >= 1.94 && mean <= 2.06 && max_dev <= 0.01 &&
                    preserved_violations == 0;
  return {pass, Format("mean replacements %.4f, max rank-frequency deviation %.4f, "
                       "%g outputs altered a protected token",
                       mean, max_dev, preserved_violations)};
}

Outcome SmotePrimitive() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> dim(1, 16);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int endpoint_failures = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int d = dim(rng);
    std::vector<double> x(d), xp(d);
    for (int i = 0; i < d; ++i) {
      x[i] = coord(rng);
      xp[i] = coord(rng);
    }
    endpoint_failures += SmoteInterpolate(x, xp, 0.0) != x;
    endpoint_failures += SmoteInterpolate(x, xp, 1.0) != xp;
    const double a = unit(rng);
    const auto z = SmoteInterpolate(x, xp, a);
    // z lies on the segment: z - x is parallel to xp - x with coefficient a,
    // and every coordinate sits between the endpoints.
    for (int i = 0; i < d; ++i) {
      worst = std::max(worst, std::abs((z[i] - x[i]) - a * (xp[i] - x[i])));
      const double lo = std::min(x[i], xp[i]);
      const double hi = std::max(x[i], xp[i]);
      worst = std::max({worst, lo - z[i], z[i] - hi});
    }
  }
  return {endpoint_failures == 0 && worst <= 1e-12,
          Format("%g endpoint mismatches, max off-segment deviation %.3g over 10000 pairs",
                 endpoint_failures, worst)};
}

Outcome ContextRules() {
  std::vector<std::string> words;
  for (int i = 0; i < 40; ++i) words.push_back("w" + std::to_string(i));
  const Vocabulary vocab = Vocabulary::Build({words});
  ContextAssemblyConfig cfg;
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> word(0, 49);  // 40..49 are unknown words
  std::uniform_int_distribution<int> length(0, 160);
  int violations = 0;
  int long_recent = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> recent(length(rng)), prior(length(rng));
    if (recent.empty() && prior.empty()) recent.resize(1);
    for (auto& t : recent) t = "w" + std::to_string(word(rng));
    for (auto& t : prior) t = "w" + std::to_string(word(rng));
    long_recent += recent.size() > 129;
    auto join = [](const std::vector<std::string>& ts) {
      std::string s;
      for (const auto& t : ts) s += (s.empty() ? "" : " ") + t;
      return s;
    };
    auto ids_of = [&](const std::vector<std::string>& ts) {
      std::vector<TokenId> out;
      for (const auto& t : ts) {
        const int n = std::stoi(t.substr(1));
        out.push_back(n < 40 ? vocab.Encode(t) : kUnkId);
      }
      return out;
    };
    ContextExample ex;
    ex.raw_context_texts = {join(recent), join(prior)};
    ex.context_token_ids = AssembleContext(recent, prior, vocab, cfg);
    const auto& ids = ex.context_token_ids;
    const auto r = ids_of(recent);
    const auto p = ids_of(prior);

    bool ok = ids.size() <= 130 && !ids.empty() && ids[0] == kClsId;
    const auto seps = std::count(ids.begin(), ids.end(), kSepId);
    ok = ok && seps == (r.size() <= 128 ? 1 : 0);
    if (r.size() <= 129) {
      ok = ok && std::equal(r.begin(), r.end(), ids.begin() + 1);
    }
    std::vector<TokenId> full = {kClsId};
    full.insert(full.end(), r.begin(), r.end());
    full.push_back(kSepId);
    full.insert(full.end(), p.begin(), p.end());
    full.resize(std::min<std::size_t>(full.size(), 130));
    ok = ok && ids == full;

    std::vector<TokenId> single = {kClsId};
    single.insert(single.end(), r.begin(), r.end());
    single.resize(std::min<std::size_t>(single.size(), 130));
    if (!recent.empty()) {
      ok = ok && AblateSingleTweet(ex, vocab, cfg).context_token_ids == single;
    }
    std::vector<TokenId> stripped = {kClsId};
    stripped.insert(stripped.end(), r.begin(), r.end());
    stripped.insert(stripped.end(), p.begin(), p.end());
    stripped.resize(std::min<std::size_t>(stripped.size(), 130));
    ok = ok && AblateStripSeparator(ex, vocab, cfg).context_token_ids == stripped;
    violations += !ok;
  }
  return {violations == 0,
          Format("%g of 1000 random contexts violate a rule (%g with recent > 129 tokens)",
                 violations, long_recent)};
}

Outcome DirectionalAblation() {
  ScratchDir dir("ablate");
  ToyCorpusConfig toy;
  toy.seed = 1;
  toy.placement = ToyCorpusConfig::Placement::kOlderOnly;
  const PipelineConfig cfg = ToyConfig(dir.path(), toy, "none", "work");
  RunIngest(cfg);
  RunAblate(cfg);
  const json report = json::parse(Slurp(dir.path() / "work/reports/ablation.json"));
  const double full = RunNamed(report, "base")["aupr"].get<double>();
  const double single = RunNamed(report, "single_tweet")["aupr"].get<double>();
  return {full - single >= 0.2,
          Format("full-context AUPR %.4f, single-tweet AUPR %.4f, drop %.4f",
                 full, single, full - single)};
}

Outcome Determinism() {
  ScratchDir dir("determinism");
  ToyCorpusConfig toy;
  toy.num_conversations = 200;
  toy.seed = 9;
  std::string metrics[2];
  std::string checksums[2];
  for (int run = 0; run < 2; ++run) {
    const PipelineConfig cfg =
        ToyConfig(dir.path(), toy, "synthetic", "work" + std::to_string(run));
    RunIngest(cfg);
    RunOversample(cfg);
    RunTrain(cfg);
    RunEval(cfg, "base");
    const Workdir wd{cfg.workdir};
    metrics[run] = Slurp(wd.reports_dir() / "run_base.json");
    std::ifstream ckpt(wd.checkpoint_file(), std::ios::binary);
    checksums[run] = CheckpointChecksum(LoadCheckpoint(ckpt).header);
  }
  const bool same = !metrics[0].empty() && metrics[0] == metrics[1] &&
                    checksums[0] == checksums[1];
  return {same, std::string("metrics JSON ") +
                    (metrics[0] == metrics[1] ? "identical" : "differs") +
                    ", checkpoint checksum " + checksums[0] +
                    (checksums[0] == checksums[1] ? " (identical)" : " vs " + checksums[1])};
}

Outcome KnnExactness() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> num_words(2, 50);
  std::uniform_int_distribution<int> dims(2, 10);
  std::uniform_int_distribution<int> grid(-2, 2);
  std::uniform_int_distribution<int> kk(1, 5);
  int mismatches = 0;
  long queries = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = num_words(rng);
    const int d = dims(rng);
    EmbeddingTable table;
    std::vector<std::pair<std::string, std::vector<double>>> raw;
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("t" + std::to_string(i));
    std::shuffle(names.begin(), names.end(), rng);
    for (const auto& w : names) {
      // A coarse integer grid produces many equal distances.
      std::vector<double> v(d);
      for (auto& x : v) x = grid(rng);
      table.Insert(w, v);
      raw.emplace_back(w, v);
    }
    const int k = kk(rng);
    for (const auto& w : names) {
      ++queries;
      std::vector<std::string> got;
      for (const auto& nb : KNearest(table, w, k)) got.push_back(nb.word);
      mismatches += got != oracle::FullSortKnn(raw, w, k);
    }
  }
  return {mismatches == 0, Format("%g mismatches over %g queries on 500 tables",
                                  mismatches, static_cast<double>(queries))};
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<Outcome()> run;
  double time_limit_s;  // <= 0: no limit
};

}  // namespace
}  // namespace derail

int main() {
  using namespace derail;
  const Criterion criteria[] = {
      {"C1", "AUPR oracle equivalence", AuprOracle, 5},
      {"C2", "metric definitions", MetricDefinitions, 0},
      {"C3", "gradient check", GradientCheck, 30},
      {"C4", "end-to-end learnability", Learnability, 120},
      {"C5", "oversampling statistics", OversamplingStatistics, 0},
      {"C6", "SMOTE primitive", SmotePrimitive, 0},
      {"C7", "context rules", ContextRules, 0},
      {"C8", "directional ablation effect", DirectionalAblation, 0},
      {"C9", "determinism", Determinism, 0},
      {"C10", "k-NN exactness", KnnExactness, 0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = Format("%.2fs", secs);
    if (c.time_limit_s > 0) {
      timing += Format(" (limit %gs)", c.time_limit_s);
      if (secs >= c.time_limit_s) {
        outcome.pass = false;
        outcome.detail += "; over time limit";
      }
    }
    failures += !outcome.pass;
    std::printf("[%s] %s %s: %s [%s]\n", outcome.pass ? "PASS" : "FAIL", c.id,
                c.title, outcome.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n",
              static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}

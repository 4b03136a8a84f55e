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

#include "derail/pipeline.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "derail/checkpoint.h"
#include "derail/embedding_store.h"
#include "derail/errors.h"
#include "derail/eval_harness.h"
#include "derail/hashing.h"

namespace derail {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one JSON object section, reporting failures with a dotted path and
// rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  // Call once every key has been read.
  void Finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.contains(key)) throw ConfigError(Path(key), "unknown key");
    }
  }

  template <typename T>
  void Read(const std::string& key, T& out) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(Path(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) {
          throw ConfigError(Path(key), "expected an integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError(Path(key), "expected a number");
      }
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(Path(key), e.what());
    }
  }

  void ReadPath(const std::string& key, fs::path& out, const fs::path& base) {
    std::string s;
    Read(key, s);
    if (s.empty()) return;
    fs::path p(s);
    out = p.is_relative() && !base.empty() ? base / p : p;
  }

  std::optional<Section> Child(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return std::optional<Section>(std::in_place, *it, Path(key));
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void EnsureParent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void WriteTextFile(const fs::path& path, const std::string& content) {
  EnsureParent(path);
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error("cannot write " + path.string());
}

std::ifstream OpenInput(const fs::path& path, const std::string& hint = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw NotFoundError("cannot open " + path.string() +
                        (hint.empty() ? "" : " (" + hint + ")"));
  }
  return in;
}

json Meta(const PipelineConfig& cfg, const std::string& stage) {
  return {{"config_hash", cfg.Hash()}, {"seed", cfg.seed}, {"stage", stage}};
}

std::string CsvComment(const PipelineConfig& cfg) {
  return "# config_hash=" + cfg.Hash() + " seed=" + std::to_string(cfg.seed) +
         "\n";
}

std::string SvgComment(const PipelineConfig& cfg) {
  return "<!-- config_hash=" + cfg.Hash() +
         " seed=" + std::to_string(cfg.seed) + " -->\n";
}

Vocabulary LoadVocabulary(const Workdir& wd) {
  auto in = OpenInput(wd.vocab_file(), "run ingest first");
  return Vocabulary::Load(in);
}

std::set<std::string> LoadStopwords(const PipelineConfig& cfg) {
  if (cfg.stopwords.empty()) return DefaultStopwords();
  auto in = OpenInput(cfg.stopwords);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    words.insert(line);
  }
  return words;
}

std::vector<int> Labels(const std::vector<ContextExample>& examples) {
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const auto& ex : examples) labels.push_back(ex.label);
  return labels;
}

ModelConfig ResolveModelConfig(const PipelineConfig& cfg,
                               const Vocabulary& vocab) {
  ModelConfig model = cfg.model;
  model.vocab_size = static_cast<int>(vocab.size());
  model.max_len = cfg.context.max_len;
  return model;
}

TrainConfig ResolveTrainConfig(const PipelineConfig& cfg) {
  TrainConfig train = cfg.train;
  train.seed = DeriveSeed(cfg.seed, "train");
  return train;
}

void WriteReportFiles(const PipelineConfig& cfg, const fs::path& stem,
                      const MetricsReport& report, json extra) {
  WriteTextFile(stem.string() + ".csv", CsvComment(cfg) + report.ToCsv());
  json j = report.ToJson();
  j["config_hash"] = cfg.Hash();
  j["seed"] = cfg.seed;
  for (auto& [key, value] : extra.items()) j[key] = value;
  WriteTextFile(stem.string() + ".json", j.dump(2) + "\n");
  std::string svg = report.ToSvg();
  svg.insert(svg.find('\n') + 1, SvgComment(cfg));
  WriteTextFile(stem.string() + ".svg", svg);
}

std::string Fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed << v;
  return out.str();
}

}  // namespace

std::string ToString(OversampleMode mode) {
  switch (mode) {
    case OversampleMode::kNone: return "none";
    case OversampleMode::kRandom: return "random";
    case OversampleMode::kSynthetic: return "synthetic";
  }
  return "none";
}

OversampleMode ParseOversampleMode(const std::string& name) {
  if (name == "none") return OversampleMode::kNone;
  if (name == "random") return OversampleMode::kRandom;
  if (name == "synthetic") return OversampleMode::kSynthetic;
  throw ConfigError("oversample_mode",
                    "must be one of none, random, synthetic (got '" + name +
                        "')");
}

PipelineConfig PipelineConfig::FromJson(const json& j, const fs::path& base_dir) {
  PipelineConfig cfg;
  Section root(j, "");
  if (auto paths = root.Child("paths")) {
    paths->ReadPath("corpus", cfg.corpus, base_dir);
    paths->ReadPath("embeddings", cfg.embeddings, base_dir);
    paths->ReadPath("stopwords", cfg.stopwords, base_dir);
    paths->ReadPath("workdir", cfg.workdir, base_dir);
    paths->Finish();
  }
  root.Read("seed", cfg.seed);
  if (auto split = root.Child("split")) {
    split->Read("train", cfg.split.train);
    split->Read("val", cfg.split.val);
    split->Read("test", cfg.split.test);
    split->Finish();
  }
  if (auto context = root.Child("context")) {
    context->Read("max_len", cfg.context.max_len);
    context->Read("most_recent_first", cfg.context.most_recent_first);
    context->Read("include_separator", cfg.context.include_separator);
    context->Finish();
  }
  if (auto synthetic = root.Child("synthetic")) {
    synthetic->Read("p_replace", cfg.synthetic.p_replace);
    synthetic->Read("k", cfg.synthetic.k);
    synthetic->Read("rank_weights", cfg.synthetic.rank_weights);
    synthetic->Read("n_repeats", cfg.synthetic.n_repeats);
    synthetic->Read("source_fraction", cfg.synthetic.source_fraction);
    synthetic->Finish();
  }
  if (auto model = root.Child("model")) {
    model->Read("num_layers", cfg.model.num_layers);
    model->Read("num_heads", cfg.model.num_heads);
    model->Read("hidden", cfg.model.hidden);
    model->Read("ffn_multiplier", cfg.model.ffn_multiplier);
    model->Read("dropout", cfg.model.dropout);
    model->Finish();
  }
  if (auto train = root.Child("train")) {
    train->Read("batch_size", cfg.train.batch_size);
    train->Read("learning_rate", cfg.train.learning_rate);
    train->Read("max_epochs", cfg.train.max_epochs);
    train->Read("beta1", cfg.train.beta1);
    train->Read("beta2", cfg.train.beta2);
    train->Read("epsilon", cfg.train.epsilon);
    train->Read("clip_norm", cfg.train.clip_norm);
    train->Finish();
  }
  std::string mode = ToString(cfg.oversample_mode);
  root.Read("oversample_mode", mode);
  cfg.oversample_mode = ParseOversampleMode(mode);
  root.Read("threshold", cfg.threshold);
  root.Read("neighbor_threads", cfg.neighbor_threads);
  root.Finish();
  return cfg;
}

PipelineConfig PipelineConfig::Load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", e.what());
  }
  return FromJson(j, path.parent_path());
}

json PipelineConfig::ToJson() const {
  return {
      {"paths",
       {{"corpus", corpus.generic_string()},
        {"embeddings", embeddings.generic_string()},
        {"stopwords", stopwords.generic_string()},
        {"workdir", workdir.generic_string()}}},
      {"seed", seed},
      {"split", {{"train", split.train}, {"val", split.val}, {"test", split.test}}},
      {"context",
       {{"max_len", context.max_len},
        {"most_recent_first", context.most_recent_first},
        {"include_separator", context.include_separator}}},
      {"synthetic",
       {{"p_replace", synthetic.p_replace},
        {"k", synthetic.k},
        {"rank_weights", synthetic.rank_weights},
        {"n_repeats", synthetic.n_repeats},
        {"source_fraction", synthetic.source_fraction}}},
      {"model",
       {{"num_layers", model.num_layers},
        {"num_heads", model.num_heads},
        {"hidden", model.hidden},
        {"ffn_multiplier", model.ffn_multiplier},
        {"dropout", model.dropout}}},
      {"train",
       {{"batch_size", train.batch_size},
        {"learning_rate", train.learning_rate},
        {"max_epochs", train.max_epochs},
        {"beta1", train.beta1},
        {"beta2", train.beta2},
        {"epsilon", train.epsilon},
        {"clip_norm", train.clip_norm}}},
      {"oversample_mode", ToString(oversample_mode)},
      {"threshold", threshold},
      {"neighbor_threads", neighbor_threads},
  };
}

std::string PipelineConfig::Hash() const {
  json j = ToJson();
  j["paths"].erase("workdir");
  return HexDigest(Fnv1a64(j.dump()));
}

void PipelineConfig::Validate() const {
  if (workdir.empty()) throw ConfigError("paths.workdir", "must be set");
  split.Validate();
  context.Validate();
  synthetic.Validate();
  ModelConfig model_check = model;
  model_check.vocab_size = 1;
  model_check.max_len = context.max_len;
  model_check.Validate();
  TrainConfig train_check = train;
  train_check.Validate();
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("threshold", "must be in [0, 1]");
  }
  if (neighbor_threads < 1) {
    throw ConfigError("neighbor_threads", "must be >= 1");
  }
}

fs::path Workdir::train_file(OversampleMode mode) const {
  if (mode == OversampleMode::kNone) return split_file("train");
  return examples_dir() / ("train." + ToString(mode) + ".jsonl");
}

WorkdirLock::WorkdirLock(const fs::path& workdir) {
  fs::create_directories(workdir);
  path_ = workdir / ".lock";
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw Error("workdir " + workdir.string() +
                  " is locked by another command (remove " + path_.string() +
                  " if stale)");
    }
    throw Error("cannot create lock " + path_.string() + ": " +
                std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

WorkdirLock::~WorkdirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

void WriteExamples(const fs::path& path,
                   const std::vector<ContextExample>& examples,
                   const json& meta) {
  std::string out = json{{"meta", meta}}.dump() + "\n";
  for (const auto& ex : examples) {
    json j = {{"target_id", ex.target_id},
              {"context", {ex.raw_context_texts[0], ex.raw_context_texts[1]}},
              {"context_token_ids", ex.context_token_ids},
              {"label", ex.label},
              {"synthetic", ex.synthetic},
              {"source_id", nullptr}};
    if (ex.source_id) j["source_id"] = *ex.source_id;
    out += j.dump() + "\n";
  }
  WriteTextFile(path, out);
}

std::vector<ContextExample> ReadExamples(const fs::path& path) {
  auto in = OpenInput(path);
  std::vector<ContextExample> examples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.contains("meta")) continue;
      ContextExample ex;
      ex.target_id = j.at("target_id").get<std::string>();
      ex.raw_context_texts = {j.at("context").at(0).get<std::string>(),
                              j.at("context").at(1).get<std::string>()};
      ex.context_token_ids = j.at("context_token_ids").get<std::vector<TokenId>>();
      ex.label = j.at("label").get<int>();
      ex.synthetic = j.value("synthetic", false);
      if (auto it = j.find("source_id"); it != j.end() && !it->is_null()) {
        ex.source_id = it->get<std::string>();
      }
      examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
  return examples;
}

StageSummary RunIngest(const PipelineConfig& cfg) {
  cfg.Validate();
  if (cfg.corpus.empty() || !fs::exists(cfg.corpus)) {
    throw ConfigError("paths.corpus", "file not found: " + cfg.corpus.string());
  }
  const Workdir wd{cfg.workdir};
  auto in = OpenInput(cfg.corpus);
  const auto tweets = ParseCorpus(in);
  const auto branches = ThreadBranches(tweets);
  std::vector<ContextExample> examples;
  for (const auto& branch : branches) {
    auto extracted = ExtractExamples(branch);
    examples.insert(examples.end(), std::make_move_iterator(extracted.begin()),
                    std::make_move_iterator(extracted.end()));
  }
  if (examples.empty()) throw Error("corpus yields no labeled examples");

  auto split = StratifiedSplit(examples, cfg.split, DeriveSeed(cfg.seed, "split"));
  std::vector<std::vector<std::string>> docs;
  for (const auto& ex : split.train) {
    docs.push_back(Tokenize(ex.raw_context_texts[0]));
    docs.push_back(Tokenize(ex.raw_context_texts[1]));
  }
  const Vocabulary vocab = Vocabulary::Build(docs);
  const auto encoder = MakeContextEncoder(vocab, cfg.context);
  for (auto* part : {&split.train, &split.val, &split.test}) {
    EncodeExamples(*part, encoder);
  }

  fs::create_directories(wd.examples_dir());
  std::ostringstream vocab_text;
  vocab.Save(vocab_text);
  WriteTextFile(wd.vocab_file(), vocab_text.str());
  json meta = Meta(cfg, "ingest");
  meta["vocab_hash"] = vocab.Hash();
  WriteExamples(wd.split_file("train"), split.train, meta);
  WriteExamples(wd.split_file("val"), split.val, meta);
  WriteExamples(wd.split_file("test"), split.test, meta);

  StageSummary summary;
  summary.lines.push_back("tweets: " + std::to_string(tweets.size()) +
                          ", branches: " + std::to_string(branches.size()) +
                          ", examples: " + std::to_string(examples.size()));
  summary.lines.push_back("split train/val/test: " +
                          std::to_string(split.train.size()) + "/" +
                          std::to_string(split.val.size()) + "/" +
                          std::to_string(split.test.size()));
  summary.lines.push_back("vocabulary: " + std::to_string(vocab.size()));
  for (const auto& w : split.warnings) summary.lines.push_back("warning: " + w);
  return summary;
}

StageSummary RunOversample(const PipelineConfig& cfg) {
  cfg.Validate();
  const Workdir wd{cfg.workdir};
  StageSummary summary;
  if (cfg.oversample_mode == OversampleMode::kNone) {
    summary.lines.push_back("oversample_mode none: training uses " +
                            wd.split_file("train").string());
    return summary;
  }
  const auto train = ReadExamples(wd.split_file("train"));
  const Vocabulary vocab = LoadVocabulary(wd);
  json meta = Meta(cfg, "oversample");
  meta["oversample_mode"] = ToString(cfg.oversample_mode);
  meta["vocab_hash"] = vocab.Hash();

  std::vector<ContextExample> augmented;
  if (cfg.oversample_mode == OversampleMode::kRandom) {
    Rng rng(DeriveSeed(cfg.seed, "random_oversample"));
    augmented = RandomOversample(train, rng);
  } else {
    if (cfg.embeddings.empty() || !fs::exists(cfg.embeddings)) {
      throw ConfigError("paths.embeddings",
                        "file not found: " + cfg.embeddings.string());
    }
    auto in = OpenInput(cfg.embeddings);
    const EmbeddingTable table = EmbeddingTable::Load(in);
    // Neighbors are searched among vocabulary words so substitutions stay
    // encodable.
    std::vector<std::string> words(vocab.tokens().begin() + kNumReserved,
                                   vocab.tokens().end());
    const EmbeddingTable restricted = table.Restrict(words);
    const NeighborIndex index = BuildNeighborIndex(
        restricted, words, cfg.synthetic.k, cfg.neighbor_threads);
    std::ostringstream cache;
    index.Save(cache);
    WriteTextFile(wd.neighbors_file(), cache.str());

    SyntheticConfig synthetic = cfg.synthetic;
    synthetic.stopwords = LoadStopwords(cfg);
    synthetic.seed = DeriveSeed(cfg.seed, "synthetic");
    std::vector<ContextExample> positives;
    for (const auto& ex : train) {
      if (ex.label == 1 && !ex.synthetic) positives.push_back(ex);
    }
    const auto made = SyntheticOversample(
        positives, index, synthetic, MakeContextEncoder(vocab, cfg.context));
    augmented = train;
    augmented.insert(augmented.end(), made.begin(), made.end());
    summary.lines.push_back(
        "neighbor index: " + std::to_string(index.neighbors.size()) +
        " words (" + std::to_string(words.size() - index.neighbors.size()) +
        " vocabulary words without embeddings)");
    summary.lines.push_back(
        "synthetic positives: " + std::to_string(made.size()) + " from " +
        std::to_string(positives.size()) + " sources (ratio " +
        Fmt(positives.empty() ? 0.0
                              : static_cast<double>(made.size()) /
                                    static_cast<double>(positives.size())) +
        ")");
  }
  WriteExamples(wd.train_file(cfg.oversample_mode), augmented, meta);
  const auto pos = std::count_if(augmented.begin(), augmented.end(),
                                 [](const auto& e) { return e.label == 1; });
  summary.lines.push_back(
      "augmented train: " + std::to_string(augmented.size()) + " rows (" +
      std::to_string(pos) + " positive) -> " +
      wd.train_file(cfg.oversample_mode).string());
  return summary;
}

StageSummary RunTrain(const PipelineConfig& cfg) {
  cfg.Validate();
  const Workdir wd{cfg.workdir};
  const auto train_path = wd.train_file(cfg.oversample_mode);
  if (!fs::exists(train_path)) {
    throw NotFoundError(train_path.string() + " missing; run " +
                        (cfg.oversample_mode == OversampleMode::kNone
                             ? "ingest"
                             : "oversample") +
                        " first");
  }
  const auto train = ReadExamples(train_path);
  const auto val = ReadExamples(wd.split_file("val"));
  const Vocabulary vocab = LoadVocabulary(wd);

  const ModelConfig model = ResolveModelConfig(cfg, vocab);
  const auto result = Train(InitParams(model, DeriveSeed(cfg.seed, "init")),
                            train, val, ResolveTrainConfig(cfg));

  json meta = Meta(cfg, "train");
  meta["vocab_hash"] = vocab.Hash();
  meta["best_epoch"] = result.best_epoch;
  meta["oversample_mode"] = ToString(cfg.oversample_mode);
  fs::create_directories(wd.model_dir());
  std::ostringstream blob;
  SaveCheckpoint(blob, result.params, meta);
  WriteTextFile(wd.checkpoint_file(), blob.str());

  std::ostringstream trace;
  trace << CsvComment(cfg) << "epoch,train_loss,val_loss,val_accuracy,val_aupr\n";
  trace.precision(17);
  for (const auto& e : result.trace) {
    trace << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ','
          << e.val_accuracy << ',';
    if (e.val_aupr) trace << *e.val_aupr;
    trace << '\n';
  }
  WriteTextFile(wd.trace_file(), trace.str());

  StageSummary summary;
  for (const auto& e : result.trace) {
    summary.lines.push_back(
        "epoch " + std::to_string(e.epoch) + ": train_loss " +
        Fmt(e.train_loss) + " val_loss " + Fmt(e.val_loss) + " val_acc " +
        Fmt(e.val_accuracy) + " val_aupr " +
        (e.val_aupr ? Fmt(*e.val_aupr) : std::string("n/a")));
  }
  summary.lines.push_back("kept epoch " + std::to_string(result.best_epoch) +
                          " -> " + wd.checkpoint_file().string());
  return summary;
}

StageSummary RunEval(const PipelineConfig& cfg, const std::string& run_name) {
  cfg.Validate();
  if (run_name.empty() ||
      run_name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("name", "run name must be a plain file stem");
  }
  const Workdir wd{cfg.workdir};
  auto in = OpenInput(wd.checkpoint_file(), "run train first");
  const auto loaded = LoadCheckpoint(in);
  const Vocabulary vocab = LoadVocabulary(wd);
  if (loaded.header.at("meta").value("vocab_hash", "") != vocab.Hash()) {
    throw IntegrityError("checkpoint was trained against a different vocabulary");
  }
  const auto test = ReadExamples(wd.split_file("test"));
  const auto scores = PredictScores(loaded.params, test);
  const auto labels = Labels(test);
  const MetricsReport report = BuildReport({{run_name, scores, labels}}, cfg.threshold);
  const UrlRatio urls = UrlRatioDiagnostic(test, scores, labels, cfg.threshold);

  json extra = {
      {"checkpoint_checksum", CheckpointChecksum(loaded.header)},
      {"url_ratio",
       {{"misclassified", urls.misclassified ? json(*urls.misclassified) : json()},
        {"correct", urls.correct ? json(*urls.correct) : json()}}},
      {"scores", scores},
      {"labels", labels},
  };
  WriteReportFiles(cfg, wd.reports_dir() / ("run_" + run_name), report, extra);

  const auto& m = report.runs.front();
  StageSummary summary;
  summary.lines.push_back(report.ToCsv());
  summary.lines.push_back(
      "url ratio misclassified/correct: " +
      (urls.misclassified ? Fmt(*urls.misclassified) : std::string("n/a")) +
      " / " + (urls.correct ? Fmt(*urls.correct) : std::string("n/a")));
  summary.lines.push_back("test examples: " + std::to_string(m.counts.total()));
  return summary;
}

StageSummary RunAblate(const PipelineConfig& cfg) {
  cfg.Validate();
  const Workdir wd{cfg.workdir};
  const auto train_path = wd.train_file(cfg.oversample_mode);
  const auto train = ReadExamples(train_path);
  const auto val = ReadExamples(wd.split_file("val"));
  const auto test = ReadExamples(wd.split_file("test"));
  const Vocabulary vocab = LoadVocabulary(wd);
  const ModelConfig model = ResolveModelConfig(cfg, vocab);

  using Transform = ContextExample (*)(const ContextExample&, const Vocabulary&,
                                       const ContextAssemblyConfig&);
  const std::pair<const char*, Transform> variants[] = {
      {"base", nullptr},
      {"single_tweet", &AblateSingleTweet},
      {"no_separator", &AblateStripSeparator},
  };
  std::vector<RunResult> runs;
  StageSummary summary;
  for (const auto& [name, transform] : variants) {
    auto apply = [&](std::vector<ContextExample> xs) {
      if (transform != nullptr) {
        for (auto& x : xs) x = transform(x, vocab, cfg.context);
      }
      return xs;
    };
    const auto result =
        Train(InitParams(model, DeriveSeed(cfg.seed, "init")), apply(train),
              apply(val), ResolveTrainConfig(cfg));
    const auto test_variant = apply(test);
    runs.push_back({name, PredictScores(result.params, test_variant),
                    Labels(test_variant)});
    summary.lines.push_back(std::string(name) + ": kept epoch " +
                            std::to_string(result.best_epoch));
  }
  const MetricsReport report = BuildReport(runs, cfg.threshold);
  json extra = {{"oversample_mode", ToString(cfg.oversample_mode)}};
  WriteReportFiles(cfg, wd.reports_dir() / "ablation", report, extra);
  summary.lines.push_back(report.ToCsv());
  return summary;
}

StageSummary RunReport(const PipelineConfig& cfg,
                       const std::vector<std::string>& runs) {
  cfg.Validate();
  const Workdir wd{cfg.workdir};
  std::vector<std::string> names = runs;
  if (names.empty() && fs::exists(wd.reports_dir())) {
    for (const auto& entry : fs::directory_iterator(wd.reports_dir())) {
      const std::string file = entry.path().filename().string();
      if (file.starts_with("run_") && file.ends_with(".json")) {
        names.push_back(file.substr(4, file.size() - 4 - 5));
      }
    }
    std::sort(names.begin(), names.end());
  }
  if (names.empty()) throw NotFoundError("no evaluated runs; run eval first");

  std::vector<RunResult> results;
  for (const auto& name : names) {
    auto in = OpenInput(wd.reports_dir() / ("run_" + name + ".json"),
                        "run eval --name " + name + " first");
    json j;
    try {
      j = json::parse(in);
      results.push_back({name, j.at("scores").get<std::vector<double>>(),
                         j.at("labels").get<std::vector<int>>()});
    } catch (const json::exception& e) {
      throw ParseError("run_" + name + ".json: " + e.what(), 0);
    }
  }
  const MetricsReport report = BuildReport(results, cfg.threshold);
  WriteReportFiles(cfg, wd.reports_dir() / "report", report, json::object());
  StageSummary summary;
  summary.lines.push_back(report.ToCsv());
  return summary;
}

}  // namespace derail

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

#include "derail/oversample.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "derail/errors.h"
#include "derail/hashing.h"
#include "derail/textnorm.h"

namespace derail {
namespace {

bool IsAlphabetic(const std::string& token) {
  return !token.empty() &&
         std::all_of(token.begin(), token.end(), [](unsigned char c) {
           return std::isalpha(c) != 0;
         });
}

std::string Join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

double Uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

void SyntheticConfig::Validate() const {
  if (!(p_replace > 0.0 && p_replace <= 1.0)) {
    throw ConfigError("synthetic.p_replace", "must be in (0, 1]");
  }
  if (k < 1) throw ConfigError("synthetic.k", "must be >= 1");
  if (static_cast<int>(rank_weights.size()) != k) {
    throw ConfigError("synthetic.rank_weights", "length must equal k");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < rank_weights.size(); ++i) {
    if (!(rank_weights[i] >= 0.0)) {
      throw ConfigError("synthetic.rank_weights", "entries must be >= 0");
    }
    if (i > 0 && rank_weights[i] > rank_weights[i - 1]) {
      throw ConfigError("synthetic.rank_weights", "must be nonincreasing");
    }
    sum += rank_weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("synthetic.rank_weights", "must sum to 1");
  }
  if (n_repeats < 0) throw ConfigError("synthetic.n_repeats", "must be >= 0");
  if (!(source_fraction >= 0.0 && source_fraction <= 1.0)) {
    throw ConfigError("synthetic.source_fraction", "must be in [0, 1]");
  }
}

std::vector<double> SmoteInterpolate(std::span<const double> x,
                                     std::span<const double> x_prime,
                                     double a) {
  if (x.size() != x_prime.size()) throw Error("vector length mismatch");
  if (!(a >= 0.0 && a <= 1.0)) throw Error("interpolation factor outside [0, 1]");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = (1.0 - a) * x[i] + a * x_prime[i];
  }
  return y;
}

const std::string& SampleNeighbor(const std::vector<Neighbor>& neighbors,
                                  std::span<const double> rank_weights,
                                  Rng& rng) {
  if (neighbors.empty()) throw Error("empty neighbor list");
  const std::size_t m = std::min(neighbors.size(), rank_weights.size());
  if (m == 0) throw Error("no rank weights");
  const double total =
      std::accumulate(rank_weights.begin(), rank_weights.begin() + m, 0.0);
  const double u = Uniform01(rng) * total;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    cumulative += rank_weights[i];
    if (u < cumulative) return neighbors[i].word;
  }
  // u landed on the upper edge through rounding: last rank with weight.
  for (std::size_t i = m; i-- > 0;) {
    if (rank_weights[i] > 0.0) return neighbors[i].word;
  }
  return neighbors.front().word;
}

bool IsEligible(const std::string& token, const NeighborIndex& index,
                const SyntheticConfig& cfg) {
  if (token == kClsToken || token == kSepToken || token == kUnkToken ||
      token == kPadToken || token == kUserToken || token == kUrlToken) {
    return false;
  }
  if (!IsAlphabetic(token) || cfg.stopwords.contains(token)) return false;
  const auto* list = index.Find(token);
  return list != nullptr && !list->empty();
}

std::vector<std::string> SynthesizeTokens(const std::vector<std::string>& tokens,
                                          const NeighborIndex& index,
                                          const SyntheticConfig& cfg,
                                          Rng& rng) {
  std::vector<std::string> out = tokens;
  for (auto& token : out) {
    if (!IsEligible(token, index, cfg)) continue;
    if (Uniform01(rng) < cfg.p_replace) {
      token = SampleNeighbor(*index.Find(token), cfg.rank_weights, rng);
    }
  }
  return out;
}

std::vector<ContextExample> SyntheticOversample(
    const std::vector<ContextExample>& positives, const NeighborIndex& index,
    const SyntheticConfig& cfg, const ContextEncoder& encoder) {
  cfg.Validate();
  std::vector<ContextExample> out;
  for (const auto& source : positives) {
    if (source.label != 1) {
      throw Error("synthetic oversampling source '" + source.target_id +
                  "' is not a positive example");
    }
    Rng rng(DeriveSeed(cfg.seed, source.target_id));
    if (Uniform01(rng) >= cfg.source_fraction) continue;

    const auto recent = Tokenize(source.raw_context_texts[0]);
    const auto prior = Tokenize(source.raw_context_texts[1]);
    std::vector<std::array<std::string, 2>> seen = {source.raw_context_texts};
    for (int r = 0; r < cfg.n_repeats; ++r) {
      std::array<std::string, 2> texts = {
          Join(SynthesizeTokens(recent, index, cfg, rng)),
          Join(SynthesizeTokens(prior, index, cfg, rng))};
      if (std::find(seen.begin(), seen.end(), texts) != seen.end()) continue;
      seen.push_back(texts);

      ContextExample ex;
      ex.target_id = source.target_id + "#syn" + std::to_string(r);
      ex.raw_context_texts = texts;
      ex.label = 1;
      ex.synthetic = true;
      ex.source_id = source.target_id;
      if (encoder) ex.context_token_ids = encoder(texts[0], texts[1]);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<ContextExample> RandomOversample(
    const std::vector<ContextExample>& examples, Rng& rng) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < examples.size(); ++i) {
    by_class[examples[i].label == 1 ? 1 : 0].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) {
    throw Error("random oversampling needs both classes present");
  }
  const int minority = by_class[1].size() < by_class[0].size() ? 1 : 0;
  const auto& pool = by_class[minority];
  const std::size_t deficit =
      by_class[1 - minority].size() - by_class[minority].size();

  std::vector<ContextExample> out = examples;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (std::size_t n = 0; n < deficit; ++n) {
    out.push_back(examples[pool[pick(rng)]]);
  }
  return out;
}

}  // namespace derail

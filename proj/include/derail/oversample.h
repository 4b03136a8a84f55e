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

#ifndef DERAIL_OVERSAMPLE_H_
#define DERAIL_OVERSAMPLE_H_

#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "derail/corpus.h"
#include "derail/embedding_store.h"

namespace derail {

using Rng = std::mt19937_64;

// English stopword list shipped with the library (version 1).
const std::set<std::string>& DefaultStopwords();

struct SyntheticConfig {
  double p_replace = 0.2;
  int k = 3;
  std::vector<double> rank_weights = {0.5, 0.3, 0.2};
  int n_repeats = 1;
  // Probability that a positive is used as a synthesis source at all.
  // 355 / 1177 gives ~0.30 synthetic rows per positive with n_repeats = 1.
  double source_fraction = 355.0 / 1177.0;
  std::set<std::string> stopwords = DefaultStopwords();
  std::uint64_t seed = 0;

  void Validate() const;
};

// y = x + a (x' - x).
std::vector<double> SmoteInterpolate(std::span<const double> x,
                                     std::span<const double> x_prime,
                                     double a);

// Draws one neighbor by rank weight. Only the first neighbors.size() weights
// are used, renormalized.
const std::string& SampleNeighbor(const std::vector<Neighbor>& neighbors,
                                  std::span<const double> rank_weights,
                                  Rng& rng);

// Tokens that may be substituted: alphabetic, not a stopword, not a reserved
// or replacement token, and with at least one neighbor in the index.
bool IsEligible(const std::string& token, const NeighborIndex& index,
                const SyntheticConfig& cfg);

// Same-length copy where each eligible token is independently replaced with
// probability cfg.p_replace.
std::vector<std::string> SynthesizeTokens(const std::vector<std::string>& tokens,
                                          const NeighborIndex& index,
                                          const SyntheticConfig& cfg, Rng& rng);

// Synthetic positives derived from `positives`. Each source draws from its
// own stream seeded by (cfg.seed, target_id), so output does not depend on
// processing order. Variants equal to the source or to an earlier variant
// are dropped. Token ids come from `encoder` when given.
std::vector<ContextExample> SyntheticOversample(
    const std::vector<ContextExample>& positives, const NeighborIndex& index,
    const SyntheticConfig& cfg, const ContextEncoder& encoder = {});

// Duplicates minority-class rows (with replacement) until both classes have
// the same count. Originals keep their positions; duplicates are appended.
std::vector<ContextExample> RandomOversample(
    const std::vector<ContextExample>& examples, Rng& rng);

}  // namespace derail

#endif  // DERAIL_OVERSAMPLE_H_

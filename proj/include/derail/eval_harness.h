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

#ifndef DERAIL_EVAL_HARNESS_H_
#define DERAIL_EVAL_HARNESS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "derail/corpus.h"
#include "derail/textnorm.h"
#include "json.hpp"

namespace derail {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct PointMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PRPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  // One point per distinct score, thresholds descending.
  std::vector<PRPoint> points;
  double aupr = 0.0;
};

// A score at or above `threshold` predicts the positive class.
ConfusionCounts Confusion(std::span<const double> scores,
                          std::span<const int> labels,
                          double threshold = 0.5);

// Zero denominators give 0 for precision, recall and F1.
PointMetrics ComputePointMetrics(const ConfusionCounts& c);

// Step-wise average precision with tied scores entering together.
PRCurve ComputePRCurve(std::span<const double> scores,
                       std::span<const int> labels);

// Rebuilds the context from the most recent tweet alone: [CLS] + recent.
ContextExample AblateSingleTweet(const ContextExample& example,
                                 const Vocabulary& vocab,
                                 const ContextAssemblyConfig& cfg);

// Rebuilds the context without the separator token.
ContextExample AblateStripSeparator(const ContextExample& example,
                                    const Vocabulary& vocab,
                                    const ContextAssemblyConfig& cfg);

struct UrlRatio {
  std::optional<double> misclassified;
  std::optional<double> correct;
};

// Fraction of misclassified / correctly classified examples whose context
// contains HTTPURL. A group with no members yields nullopt.
UrlRatio UrlRatioDiagnostic(const std::vector<ContextExample>& examples,
                            std::span<const double> scores,
                            std::span<const int> labels, double threshold);

struct RunResult {
  std::string name;
  std::vector<double> scores;
  std::vector<int> labels;
};

struct RunMetrics {
  std::string name;
  ConfusionCounts counts;
  PointMetrics point;
  PRCurve curve;
};

struct MetricsReport {
  double threshold = 0.5;
  std::vector<RunMetrics> runs;

  // Header "Model,A,P,R,F1,AUPR", values with two decimals.
  std::string ToCsv() const;
  // Full-precision metrics and curve points.
  nlohmann::json ToJson() const;
  // One polyline per run over the unit square.
  std::string ToSvg() const;
};

MetricsReport BuildReport(const std::vector<RunResult>& runs,
                          double threshold = 0.5);

}  // namespace derail

#endif  // DERAIL_EVAL_HARNESS_H_

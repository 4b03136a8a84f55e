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

#include "derail/eval_harness.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "derail/errors.h"

namespace derail {
namespace {

void CheckAligned(std::size_t scores, std::size_t labels) {
  if (scores != labels) {
    throw Error("scores/labels length mismatch: " + std::to_string(scores) +
                " vs " + std::to_string(labels));
  }
}

std::string Fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string XmlEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

ConfusionCounts Confusion(std::span<const double> scores,
                          std::span<const int> labels, double threshold) {
  CheckAligned(scores.size(), labels.size());
  if (scores.empty()) throw Error("confusion over an empty set");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.tp;
    if (predicted && !actual) ++c.fp;
    if (!predicted && actual) ++c.fn;
    if (!predicted && !actual) ++c.tn;
  }
  return c;
}

PointMetrics ComputePointMetrics(const ConfusionCounts& c) {
  if (c.total() <= 0) throw Error("metrics over an empty confusion");
  PointMetrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.precision = c.tp + c.fp == 0
                    ? 0.0
                    : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = c.tp + c.fn == 0
                 ? 0.0
                 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

PRCurve ComputePRCurve(std::span<const double> scores,
                       std::span<const int> labels) {
  CheckAligned(scores.size(), labels.size());
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0) throw Error("AUPR undefined: no positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  PRCurve curve;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  const auto total_pos = static_cast<double>(positives);
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    std::int64_t group_tp = 0;
    for (; i < order.size() && scores[order[i]] == threshold; ++i) {
      if (labels[order[i]] == 1) {
        ++group_tp;
      } else {
        ++fp;
      }
    }
    tp += group_tp;
    const double precision =
        static_cast<double>(tp) / static_cast<double>(tp + fp);
    curve.aupr += precision * static_cast<double>(group_tp) / total_pos;
    curve.points.push_back(
        {threshold, static_cast<double>(tp) / total_pos, precision});
  }
  return curve;
}

ContextExample AblateSingleTweet(const ContextExample& example,
                                 const Vocabulary& vocab,
                                 const ContextAssemblyConfig& cfg) {
  ContextExample out = example;
  out.raw_context_texts[1].clear();
  ContextAssemblyConfig single = cfg;
  single.include_separator = false;
  single.most_recent_first = true;
  out.context_token_ids =
      AssembleContext(Tokenize(example.raw_context_texts[0]), {}, vocab, single);
  return out;
}

ContextExample AblateStripSeparator(const ContextExample& example,
                                    const Vocabulary& vocab,
                                    const ContextAssemblyConfig& cfg) {
  ContextExample out = example;
  ContextAssemblyConfig stripped = cfg;
  stripped.include_separator = false;
  out.context_token_ids =
      AssembleContext(Tokenize(example.raw_context_texts[0]),
                      Tokenize(example.raw_context_texts[1]), vocab, stripped);
  return out;
}

UrlRatio UrlRatioDiagnostic(const std::vector<ContextExample>& examples,
                            std::span<const double> scores,
                            std::span<const int> labels, double threshold) {
  CheckAligned(scores.size(), labels.size());
  CheckAligned(examples.size(), labels.size());
  std::size_t counts[2] = {0, 0};
  std::size_t with_url[2] = {0, 0};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const bool correct = (scores[i] >= threshold) == (labels[i] == 1);
    const int group = correct ? 1 : 0;
    ++counts[group];
    bool has_url = false;
    for (const auto& text : examples[i].raw_context_texts) {
      const auto tokens = Tokenize(text);
      has_url |= std::find(tokens.begin(), tokens.end(), kUrlToken) != tokens.end();
    }
    if (has_url) ++with_url[group];
  }
  UrlRatio ratio;
  if (counts[0] > 0) {
    ratio.misclassified =
        static_cast<double>(with_url[0]) / static_cast<double>(counts[0]);
  }
  if (counts[1] > 0) {
    ratio.correct =
        static_cast<double>(with_url[1]) / static_cast<double>(counts[1]);
  }
  return ratio;
}

MetricsReport BuildReport(const std::vector<RunResult>& runs,
                          double threshold) {
  if (runs.empty()) throw Error("report needs at least one run");
  MetricsReport report;
  report.threshold = threshold;
  for (const auto& run : runs) {
    RunMetrics m;
    m.name = run.name;
    m.counts = Confusion(run.scores, run.labels, threshold);
    m.point = ComputePointMetrics(m.counts);
    m.curve = ComputePRCurve(run.scores, run.labels);
    report.runs.push_back(std::move(m));
  }
  return report;
}

std::string MetricsReport::ToCsv() const {
  std::ostringstream out;
  out << "Model,A,P,R,F1,AUPR\n";
  for (const auto& r : runs) {
    out << CsvField(r.name) << ',' << Fixed2(r.point.accuracy) << ','
        << Fixed2(r.point.precision) << ',' << Fixed2(r.point.recall) << ','
        << Fixed2(r.point.f1) << ',' << Fixed2(r.curve.aupr) << '\n';
  }
  return out.str();
}

nlohmann::json MetricsReport::ToJson() const {
  nlohmann::json runs_json = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.curve.points) {
      points.push_back({p.threshold, p.recall, p.precision});
    }
    runs_json.push_back({
        {"name", r.name},
        {"confusion",
         {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn},
          {"tn", r.counts.tn}}},
        {"accuracy", r.point.accuracy},
        {"precision", r.point.precision},
        {"recall", r.point.recall},
        {"f1", r.point.f1},
        {"aupr", r.curve.aupr},
        {"pr_curve", points},
    });
  }
  return {{"threshold", threshold}, {"runs", runs_json}};
}

std::string MetricsReport::ToSvg() const {
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                            "#ff7f0e", "#9467bd", "#8c564b"};
  constexpr double kSize = 400.0;
  constexpr double kMargin = 40.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
      << kSize + 2 * kMargin << "\" height=\"" << kSize + 2 * kMargin
      << "\">\n";
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
      << kSize << "\" height=\"" << kSize
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kMargin + kSize / 2 << "\" y=\"" << kSize + 1.8 * kMargin
      << "\" text-anchor=\"middle\">Recall</text>\n";
  out << "<text x=\"12\" y=\"" << kMargin + kSize / 2
      << "\" transform=\"rotate(-90 12 " << kMargin + kSize / 2
      << ")\" text-anchor=\"middle\">Precision</text>\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    const char* color = kColors[i % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (std::size_t j = 0; j < r.curve.points.size(); ++j) {
      const auto& p = r.curve.points[j];
      if (j > 0) out << ' ';
      out << kMargin + p.recall * kSize << ','
          << kMargin + (1.0 - p.precision) * kSize;
    }
    out << "\"/>\n";
    out << "<text x=\"" << kMargin + 10 << "\" y=\"" << kMargin + 20 + 18 * i
        << "\" fill=\"" << color << "\">" << XmlEscape(r.name)
        << " (AUPR " << Fixed2(r.curve.aupr) << ")</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace derail

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

#include "derail/embedding_store.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

#include "derail/errors.h"
#include "json.hpp"

namespace derail {
namespace {

std::string Lower(std::string s) {
  for (char& c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return s;
}

bool NeighborLess(const Neighbor& a, const Neighbor& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.word < b.word;
}

}  // namespace

EmbeddingTable EmbeddingTable::Load(std::istream& in,
                                    std::optional<int> expected_dim) {
  EmbeddingTable table;
  if (expected_dim) {
    if (*expected_dim < 1) throw Error("expected_dim must be >= 1");
    table.dim_ = *expected_dim;
  }
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos) continue;
    std::size_t end = line.find_first_of(" \t", pos);
    std::string word = line.substr(pos, end - pos);
    values.clear();
    pos = end;
    while (pos != std::string::npos) {
      pos = line.find_first_not_of(" \t", pos);
      if (pos == std::string::npos) break;
      end = line.find_first_of(" \t", pos);
      std::string_view field =
          std::string_view(line).substr(pos, end == std::string::npos
                                                 ? std::string::npos
                                                 : end - pos);
      double v = 0.0;
      auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError("non-numeric component '" + std::string(field) + "'",
                         line_no);
      }
      if (!std::isfinite(v)) {
        throw ParseError("non-finite component", line_no);
      }
      values.push_back(v);
      pos = end;
    }
    if (values.empty()) throw ParseError("entry without components", line_no);
    if (table.dim_ == 0) table.dim_ = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != table.dim_) {
      throw ParseError("expected " + std::to_string(table.dim_) +
                           " components, got " +
                           std::to_string(values.size()),
                       line_no);
    }
    table.Insert(word, values);
  }
  return table;
}

void EmbeddingTable::Insert(const std::string& word,
                            std::vector<double> vector) {
  if (dim_ == 0) dim_ = static_cast<int>(vector.size());
  if (vector.empty() || static_cast<int>(vector.size()) != dim_) {
    throw Error("vector for '" + word + "' has wrong dimension");
  }
  for (double v : vector) {
    if (!std::isfinite(v)) throw Error("non-finite component for '" + word + "'");
  }
  std::string key = Lower(word);
  if (auto it = index_.find(key); it != index_.end()) {
    std::copy(vector.begin(), vector.end(),
              data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    return;
  }
  index_.emplace(key, words_.size());
  words_.push_back(std::move(key));
  data_.insert(data_.end(), vector.begin(), vector.end());
}

int EmbeddingTable::dim() const {
  if (words_.empty()) throw Error("embedding table is empty; dim undefined");
  return dim_;
}

bool EmbeddingTable::Contains(const std::string& word) const {
  return index_.contains(Lower(word));
}

std::span<const double> EmbeddingTable::Vector(const std::string& word) const {
  auto it = index_.find(Lower(word));
  if (it == index_.end()) throw NotFoundError("word '" + word + "' not found");
  return Row(it->second);
}

std::span<const double> EmbeddingTable::Row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * dim_, dim_);
}

EmbeddingTable EmbeddingTable::Restrict(
    const std::vector<std::string>& keep) const {
  EmbeddingTable out;
  out.dim_ = dim_;
  for (const auto& w : keep) {
    auto it = index_.find(Lower(w));
    if (it == index_.end() || out.index_.contains(it->first)) continue;
    auto row = Row(it->second);
    out.Insert(it->first, std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

double EuclideanDistance(std::span<const double> u,
                         std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error("vector length mismatch: " + std::to_string(u.size()) +
                " vs " + std::to_string(v.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::vector<Neighbor> KNearest(const EmbeddingTable& table,
                               const std::string& word, int k) {
  if (k < 1) throw Error("k must be >= 1");
  const auto query = table.Vector(word);
  const std::string key = Lower(word);
  std::vector<Neighbor> candidates;
  candidates.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.words()[i] == key) continue;
    candidates.push_back({table.words()[i], EuclideanDistance(query, table.Row(i))});
  }
  const auto take = std::min(candidates.size(), static_cast<std::size_t>(k));
  std::partial_sort(candidates.begin(),
                    candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), NeighborLess);
  candidates.resize(take);
  return candidates;
}

const std::vector<Neighbor>* NeighborIndex::Find(const std::string& word) const {
  auto it = neighbors.find(word);
  return it == neighbors.end() ? nullptr : &it->second;
}

void NeighborIndex::Save(std::ostream& out) const {
  for (const auto& [word, list] : neighbors) {
    nlohmann::json nn = nlohmann::json::array();
    for (const auto& n : list) nn.push_back({n.word, n.distance});
    out << nlohmann::json{{"word", word}, {"nn", nn}}.dump() << '\n';
  }
}

NeighborIndex NeighborIndex::Load(std::istream& in, int k) {
  NeighborIndex index;
  index.k = k;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      std::vector<Neighbor> list;
      for (const auto& pair : record.at("nn")) {
        list.push_back({pair.at(0).get<std::string>(), pair.at(1).get<double>()});
      }
      index.neighbors[record.at("word").get<std::string>()] = std::move(list);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad neighbor record: ") + e.what(),
                       line_no);
    }
  }
  return index;
}

NeighborIndex BuildNeighborIndex(const EmbeddingTable& table,
                                 const std::vector<std::string>& words, int k,
                                 int num_threads) {
  if (k < 1) throw Error("k must be >= 1");
  NeighborIndex index;
  index.k = k;

  std::set<std::string> unique;
  for (const auto& w : words) unique.insert(Lower(w));
  std::vector<std::string> present;
  for (const auto& w : unique) {
    if (table.Contains(w)) {
      present.push_back(w);
    } else {
      ++index.skipped;
    }
  }

  std::vector<std::vector<Neighbor>> lists(present.size());
  const auto workers = static_cast<std::size_t>(std::max(1, num_threads));
  auto work = [&](std::size_t begin) {
    for (std::size_t i = begin; i < present.size(); i += workers) {
      lists[i] = KNearest(table, present[i], k);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t);
  }
  for (std::size_t i = 0; i < present.size(); ++i) {
    index.neighbors.emplace(present[i], std::move(lists[i]));
  }
  return index;
}

}  // namespace derail

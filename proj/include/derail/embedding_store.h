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

#ifndef DERAIL_EMBEDDING_STORE_H_
#define DERAIL_EMBEDDING_STORE_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace derail {

// Word vectors in the GloVe text layout ("word v1 v2 ... vd" per line).
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  // dim is inferred from the first entry unless `expected_dim` is given.
  // Words are lowercased on insert; a later duplicate overwrites the earlier
  // vector.
  static EmbeddingTable Load(std::istream& in,
                             std::optional<int> expected_dim = std::nullopt);

  void Insert(const std::string& word, std::vector<double> vector);

  // Throws if the table is empty (dimension undefined).
  int dim() const;
  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  bool Contains(const std::string& word) const;
  // Throws NotFoundError for absent words.
  std::span<const double> Vector(const std::string& word) const;

  // Words in insertion order; row i of the data matrix belongs to words()[i].
  const std::vector<std::string>& words() const { return words_; }
  std::span<const double> Row(std::size_t i) const;

  // Copy holding only the listed words (absent ones ignored).
  EmbeddingTable Restrict(const std::vector<std::string>& keep) const;

 private:
  int dim_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
};

double EuclideanDistance(std::span<const double> u, std::span<const double> v);

struct Neighbor {
  std::string word;
  double distance = 0.0;

  bool operator==(const Neighbor&) const = default;
};

// The k closest other words by Euclidean distance, ascending, ties broken by
// lexicographic word order.
std::vector<Neighbor> KNearest(const EmbeddingTable& table,
                               const std::string& word, int k);

struct NeighborIndex {
  int k = 3;
  std::map<std::string, std::vector<Neighbor>> neighbors;
  // Requested words missing from the table.
  std::size_t skipped = 0;

  const std::vector<Neighbor>* Find(const std::string& word) const;

  // JSON-lines cache: {"word": ..., "nn": [[word, dist], ...]} per line.
  void Save(std::ostream& out) const;
  static NeighborIndex Load(std::istream& in, int k);
};

// Neighbor lists for `words` (lowercased before lookup). `num_threads`
// splits the work across threads; the result does not depend on it.
NeighborIndex BuildNeighborIndex(const EmbeddingTable& table,
                                 const std::vector<std::string>& words,
                                 int k = 3, int num_threads = 1);

}  // namespace derail

#endif  // DERAIL_EMBEDDING_STORE_H_

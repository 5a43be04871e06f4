// Copyright 2026 The latefrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "latefrag/scoring.hpp"
#include "latefrag/types.hpp"

namespace latefrag {

inline constexpr std::size_t kDefaultClusters = 8;
inline constexpr std::size_t kDefaultMaxVectors = 768;

/// Bit j is set iff v[j] >= 0. Throws Error(NonFiniteInput).
BitVector binarize(std::span<const float> v);
BitMatrix binarize_rows(const TokenMatrix& m);

/// Agglomerative clustering of the rows with average linkage over cosine
/// distance, merged until min(k, rows) clusters remain. The closest pair
/// is merged first; equal distances go to the lexicographically smallest
/// (row, row) pair, where a cluster is named by its smallest member row.
///
/// Returns a cluster id per row. Ids are dense and ordered by each
/// cluster's smallest member row. Throws Error(EmptyInput) when there are
/// no rows or k == 0.
std::vector<std::size_t> cluster_content(const TokenMatrix& vectors, std::size_t k);

/// Special-token centroid followed by the content cluster centroids, in
/// full precision. Rows: min(k, content rows) + 1.
TokenMatrix pool_centroids(const SegmentedSequence& doc, std::size_t k);

struct PooledDoc {
  DocId doc_id{};
  std::size_t k = kDefaultClusters;
  BitMatrix vectors;

  friend bool operator==(const PooledDoc&, const PooledDoc&) = default;
};

struct FullDoc {
  DocId doc_id{};
  BitMatrix vectors;

  friend bool operator==(const FullDoc&, const FullDoc&) = default;
};

/// Binarized pool_centroids. Throws Error(MissingSegment) if the doc has
/// no DocContent rows or no DocPrefix/DocSuffix rows.
PooledDoc pool_document(const SegmentedSequence& doc, std::size_t k, DocId id = DocId{0});

/// Every row binarized, with DocContent rows dropped from the end until at
/// most `max_vectors` rows remain.
FullDoc full_document(const SegmentedSequence& doc, std::size_t max_vectors = kDefaultMaxVectors,
                      DocId id = DocId{0});

/// Cosine distance 1 - cos(a, b).
double cosine_distance(std::span<const float> a, std::span<const float> b);

}  // namespace latefrag

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

// Seeded fixture generators standing in for a real embedder.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "latefrag/evalbench.hpp"
#include "latefrag/types.hpp"

namespace latefrag::synth {

using Rng = std::mt19937_64;

/// Gaussian direction scaled to unit length.
std::vector<float> random_unit_row(Rng& rng, std::size_t dim);

struct DocShape {
  std::size_t prefix = 1;
  std::size_t content_min = 8;
  std::size_t content_max = 32;
  std::size_t suffix = 1;
};

/// DocPrefix / DocContent / DocSuffix rows of random unit vectors.
SegmentedSequence random_document(Rng& rng, std::size_t dim, const DocShape& shape = {});

/// QueryPrefix / QueryContent / QuerySuffix rows.
SegmentedSequence random_text_query(Rng& rng, std::size_t dim, std::size_t content,
                                    std::size_t prefix = 1, std::size_t suffix = 1);

/// Image tokens wrapped around a text query, as a joint embedder emits them.
SegmentedSequence random_multimodal_query(Rng& rng, std::size_t dim, std::size_t image_tokens,
                                          std::size_t query_tokens);

struct PlantedOptions {
  std::size_t docs = 10000;
  std::size_t queries = 200;
  std::size_t dim = kDefaultDim;
  std::size_t query_tokens = 8;   // QueryContent rows; plus one prefix and one suffix
  std::size_t image_tokens = 0;   // 0 gives text-only queries
  std::size_t noise_rows = 16;    // extra content rows in each relevant doc
  double max_noise_cosine = 0.3;  // |cos| bound between noise and query rows
  DocShape distractor{};
  std::uint64_t seed = 1;
};

/// Corpus in which the relevant doc of every query contains all of the
/// query's text rows plus noise rows. Queries and relevant docs are
/// paired one-to-one; the remaining docs are random distractors.
struct PlantedCorpus {
  std::vector<std::pair<std::string, SegmentedSequence>> docs;
  std::vector<BenchQuery> queries;
  Qrels qrels;
};

PlantedCorpus planted_needle_corpus(const PlantedOptions& options);

/// Random corpus of `count` docs with ids "doc-<i>".
std::vector<std::pair<std::string, SegmentedSequence>> random_corpus(Rng& rng, std::size_t count,
                                                                     std::size_t dim,
                                                                     const DocShape& shape = {});

/// Placeholder fragment for a synthetic doc id.
Fragment placeholder_fragment(const std::string& id);

}  // namespace latefrag::synth

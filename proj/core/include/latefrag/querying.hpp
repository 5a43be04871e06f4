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
#include <utility>
#include <vector>

#include "latefrag/types.hpp"

namespace latefrag {

/// Token-count plan of an input before it reaches the embedder.
struct QueryLayout {
  std::vector<std::pair<SegmentLabel, std::size_t>> segments;

  std::size_t total() const noexcept;
  /// One label per planned token.
  std::vector<SegmentLabel> labels() const;
};

/// Layout of the image-plus-question input: the image's instruction run is
/// replaced by the three query runs.
QueryLayout multimodal_layout(std::size_t image_prefix, std::size_t image_content,
                              std::size_t query_prefix, std::size_t query_content,
                              std::size_t query_suffix, std::size_t image_suffix);
QueryLayout text_layout(std::size_t query_prefix, std::size_t query_content,
                        std::size_t query_suffix);

enum class QueryOrigin { TextOnly, MultimodalFiltered, MultimodalFull };

struct QueryEmbedding {
  TokenMatrix matrix;
  QueryOrigin origin = QueryOrigin::TextOnly;
};

/// I^pref + I^content + q + I^suff. The image's InstructionText run is
/// dropped. Throws Error(MissingSegment) if the image has no content run or
/// the query has no QueryContent run.
SegmentedSequence compose_multimodal_query(const SegmentedSequence& image_seq,
                                           const SegmentedSequence& query_seq);

/// Keeps only the query-labeled rows (prefix, content, suffix) in order.
/// Throws Error(NoQueryTokens).
QueryEmbedding filter_query_embeddings(const SegmentedSequence& embedded);

/// Every row of a jointly embedded multimodal query, unfiltered.
QueryEmbedding full_query_embeddings(const SegmentedSequence& embedded);

/// Throws Error(EmptyQuery).
QueryEmbedding compose_text_query(const SegmentedSequence& query_seq);

}  // namespace latefrag

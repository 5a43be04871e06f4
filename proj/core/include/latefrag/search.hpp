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
#include <optional>
#include <string>
#include <vector>

#include "latefrag/index_store.hpp"
#include "latefrag/querying.hpp"
#include "latefrag/scoring.hpp"

namespace latefrag {

struct SearchParams {
  std::size_t n1 = 100;         // prefetch size
  std::size_t n2 = 5;           // returned results
  std::size_t oversample = 2;   // stage 1 keeps n1 * oversample candidates

  /// Throws Error(InvalidArgument) unless 1 <= n2 <= n1 and oversample >= 1.
  void validate() const;
};

struct SearchHit {
  DocId doc_id{};
  std::string fragment_id;
  Score score = 0.0;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

struct SearchTimings {
  double stage1_us = 0.0;
  double stage2_us = 0.0;
  double total_us = 0.0;
};

struct SearchResult {
  /// Ordered by score descending, then DocId ascending.
  std::vector<SearchHit> hits;
  /// Stage-1 survivors in stage-1 rank order; empty for one-stage search.
  std::vector<DocId> candidates;
  SearchTimings timings;
};

/// Stage 1 scores every doc's pooled bits against the binarized query and
/// keeps the best n1 * oversample; stage 2 rescores those against their
/// full tier-2 bits with the full-precision query and returns the best n2.
/// Throws Error(EmptyIndex), Error(EmptyQuery) or Error(DimMismatch).
SearchResult search_two_stage(const Index& index, const QueryEmbedding& query,
                              const SearchParams& params = {});

/// Exhaustive tier-2 rescoring of the whole corpus.
SearchResult search_one_stage(const Index& index, const QueryEmbedding& query, std::size_t n2 = 5);

/// Retriever function call emitted by a generation loop.
struct ToolCall {
  std::string name = "search_knowledge_base";
  std::string query;
  bool use_image = false;

  friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

inline constexpr const char* kSearchToolName = "search_knowledge_base";

/// Parses {"name":"search_knowledge_base","arguments":{"query":..,"use_image":..}}.
/// Throws Error(ParseError) or Error(MissingField).
ToolCall parse_tool_call(const std::string& json_text);
std::string to_json(const ToolCall& call);

/// Runs the call against the attached embedding for its modality: the
/// filtered multimodal embedding when use_image is set, the text-only
/// embedding otherwise. Throws Error(MissingEmbedding) when the needed
/// embedding is absent.
SearchResult tool_search(const ToolCall& call, const Index& index,
                         const std::optional<QueryEmbedding>& text_embedding,
                         const std::optional<QueryEmbedding>& multimodal_embedding,
                         const SearchParams& params = {});

/// Stable JSON rendering: {"hits":[{"rank","doc_id","fragment_id","score"}],
/// "timings_us":{...}}. Scores print with 17 significant digits.
std::string to_json(const SearchResult& result, bool include_timings = true);

}  // namespace latefrag

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

#include "latefrag/search.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <json.hpp>

#include "latefrag/error.hpp"

namespace latefrag {

using json = nlohmann::json;

void SearchParams::validate() const {
  if (n2 == 0 || n1 == 0) throw Error(ErrorCode::InvalidArgument, "n1 and n2 must be positive");
  if (n2 > n1) throw Error(ErrorCode::InvalidArgument, "n2 must not exceed n1");
  if (oversample == 0) throw Error(ErrorCode::InvalidArgument, "oversample must be >= 1");
}

namespace {

using Clock = std::chrono::steady_clock;

double micros(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

void check_query(const Index& index, const QueryEmbedding& query) {
  if (index.size() == 0) throw Error(ErrorCode::EmptyIndex, "index holds no documents");
  if (query.matrix.rows() == 0) throw Error(ErrorCode::EmptyQuery, "query has no rows");
  if (query.matrix.dim() != index.dim()) {
    throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query.matrix.dim()) +
                                            " vs index dim " + std::to_string(index.dim()));
  }
}

template <typename T>
struct Ranked {
  T score;
  std::uint64_t doc;
};

template <typename T>
bool better(const Ranked<T>& a, const Ranked<T>& b) {
  return a.score > b.score || (a.score == b.score && a.doc < b.doc);
}

// Best `keep` entries, sorted by (score desc, doc asc).
template <typename T>
void keep_best(std::vector<Ranked<T>>& v, std::size_t keep) {
  keep = std::min(keep, v.size());
  if (keep < v.size()) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(keep), v.end(),
                     better<T>);
    v.resize(keep);
  }
  std::sort(v.begin(), v.end(), better<T>);
}

std::vector<SearchHit> to_hits(const Index& index, const std::vector<Ranked<Score>>& ranked) {
  std::vector<SearchHit> hits;
  hits.reserve(ranked.size());
  for (const auto& r : ranked) {
    hits.push_back({DocId{r.doc}, index.fragment_id(DocId{r.doc}), r.score});
  }
  return hits;
}

}  // namespace

SearchResult search_two_stage(const Index& index, const QueryEmbedding& query,
                              const SearchParams& params) {
  params.validate();
  check_query(index, query);
  const auto t0 = Clock::now();

  const BinaryQuery binary(query.matrix);
  std::vector<Ranked<std::int64_t>> prefetch(index.size());
  for (std::uint64_t d = 0; d < index.size(); ++d) {
    prefetch[d] = {binary.score(index.pooled(DocId{d})), d};
  }
  keep_best(prefetch, params.n1 * params.oversample);
  const auto t1 = Clock::now();

  const AsymScorer scorer(query.matrix);
  std::vector<Ranked<Score>> rescored;
  rescored.reserve(prefetch.size());
  for (const auto& c : prefetch) rescored.push_back({scorer.score(index.full(DocId{c.doc})), c.doc});
  keep_best(rescored, params.n2);
  const auto t2 = Clock::now();

  SearchResult result;
  result.hits = to_hits(index, rescored);
  result.candidates.reserve(prefetch.size());
  for (const auto& c : prefetch) result.candidates.push_back(DocId{c.doc});
  const auto t3 = Clock::now();
  result.timings = {micros(t0, t1), micros(t1, t2), micros(t0, t3)};
  return result;
}

SearchResult search_one_stage(const Index& index, const QueryEmbedding& query, std::size_t n2) {
  if (n2 == 0) throw Error(ErrorCode::InvalidArgument, "n2 must be positive");
  check_query(index, query);
  const auto t0 = Clock::now();
  const AsymScorer scorer(query.matrix);
  std::vector<Ranked<Score>> scored(index.size());
  for (std::uint64_t d = 0; d < index.size(); ++d) {
    scored[d] = {scorer.score(index.full(DocId{d})), d};
  }
  keep_best(scored, n2);
  const auto t1 = Clock::now();
  SearchResult result;
  result.hits = to_hits(index, scored);
  const auto t2 = Clock::now();
  result.timings = {0.0, micros(t0, t1), micros(t0, t2)};
  return result;
}

ToolCall parse_tool_call(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "tool call must be a JSON object");
  ToolCall call;
  if (!j.contains("name")) throw Error(ErrorCode::MissingField, "name");
  if (!j.contains("arguments")) throw Error(ErrorCode::MissingField, "arguments");
  const auto& args = j["arguments"];
  try {
    call.name = j["name"].get<std::string>();
    if (!args.is_object()) throw Error(ErrorCode::ParseError, "arguments must be an object");
    if (!args.contains("query")) throw Error(ErrorCode::MissingField, "arguments.query");
    if (!args.contains("use_image")) throw Error(ErrorCode::MissingField, "arguments.use_image");
    call.query = args["query"].get<std::string>();
    call.use_image = args["use_image"].get<bool>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (call.name != kSearchToolName) {
    throw Error(ErrorCode::ParseError, "unknown tool '" + call.name + "'");
  }
  return call;
}

std::string to_json(const ToolCall& call) {
  json j = {{"name", call.name},
            {"arguments", {{"query", call.query}, {"use_image", call.use_image}}}};
  return j.dump();
}

SearchResult tool_search(const ToolCall& call, const Index& index,
                         const std::optional<QueryEmbedding>& text_embedding,
                         const std::optional<QueryEmbedding>& multimodal_embedding,
                         const SearchParams& params) {
  if (call.use_image) {
    if (!multimodal_embedding) {
      throw Error(ErrorCode::MissingEmbedding, "use_image set but no multimodal embedding attached");
    }
    return search_two_stage(index, *multimodal_embedding, params);
  }
  if (!text_embedding) {
    throw Error(ErrorCode::MissingEmbedding, "text-only call without a text embedding");
  }
  return search_two_stage(index, *text_embedding, params);
}

std::string to_json(const SearchResult& result, bool include_timings) {
  // Hand-rolled so scores keep 17 significant digits in a fixed format.
  std::string out = "{\"hits\":[";
  char buf[64];
  for (std::size_t i = 0; i < result.hits.size(); ++i) {
    const auto& h = result.hits[i];
    if (i > 0) out += ',';
    out += "{\"rank\":" + std::to_string(i + 1);
    out += ",\"doc_id\":" + std::to_string(to_index(h.doc_id));
    out += ",\"fragment_id\":" + json(h.fragment_id).dump();
    std::snprintf(buf, sizeof buf, "%.17g", h.score);
    out += ",\"score\":";
    out += buf;
    out += '}';
  }
  out += ']';
  if (include_timings) {
    std::snprintf(buf, sizeof buf, "%.3f", result.timings.stage1_us);
    out += ",\"timings_us\":{\"stage1\":";
    out += buf;
    std::snprintf(buf, sizeof buf, "%.3f", result.timings.stage2_us);
    out += ",\"stage2\":";
    out += buf;
    std::snprintf(buf, sizeof buf, "%.3f", result.timings.total_us);
    out += ",\"total\":";
    out += buf;
    out += '}';
  }
  out += "}";
  return out;
}

}  // namespace latefrag

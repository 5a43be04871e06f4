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

#include "latefrag/querying.hpp"

#include "latefrag/error.hpp"

namespace latefrag {

std::size_t QueryLayout::total() const noexcept {
  std::size_t n = 0;
  for (const auto& [label, count] : segments) n += count;
  return n;
}

std::vector<SegmentLabel> QueryLayout::labels() const {
  std::vector<SegmentLabel> out;
  out.reserve(total());
  for (const auto& [label, count] : segments) out.insert(out.end(), count, label);
  return out;
}

QueryLayout multimodal_layout(std::size_t image_prefix, std::size_t image_content,
                              std::size_t query_prefix, std::size_t query_content,
                              std::size_t query_suffix, std::size_t image_suffix) {
  return QueryLayout{{{SegmentLabel::ImagePrefix, image_prefix},
                      {SegmentLabel::ImageContent, image_content},
                      {SegmentLabel::QueryPrefix, query_prefix},
                      {SegmentLabel::QueryContent, query_content},
                      {SegmentLabel::QuerySuffix, query_suffix},
                      {SegmentLabel::ImageSuffix, image_suffix}}};
}

QueryLayout text_layout(std::size_t query_prefix, std::size_t query_content,
                        std::size_t query_suffix) {
  return QueryLayout{{{SegmentLabel::QueryPrefix, query_prefix},
                      {SegmentLabel::QueryContent, query_content},
                      {SegmentLabel::QuerySuffix, query_suffix}}};
}

namespace {

void append_rows(SegmentedSequence& out, const SegmentedSequence& in, SegmentLabel label) {
  for (std::size_t i = 0; i < in.labels.size(); ++i) {
    if (in.labels[i] == label) {
      out.matrix.append_row(in.matrix.row(i));
      out.labels.push_back(label);
    }
  }
}

}  // namespace

SegmentedSequence compose_multimodal_query(const SegmentedSequence& image_seq,
                                           const SegmentedSequence& query_seq) {
  validate_sequence(image_seq);
  validate_sequence(query_seq);
  if (count_label(image_seq, SegmentLabel::ImageContent) == 0) {
    throw Error(ErrorCode::MissingSegment, "image input has no ImageContent run");
  }
  if (count_label(query_seq, SegmentLabel::QueryContent) == 0) {
    throw Error(ErrorCode::MissingSegment, "query has no QueryContent run");
  }
  for (auto label : query_seq.labels) {
    if (!is_query_label(label)) {
      throw Error(ErrorCode::LabelOrderViolation,
                  "query sequence carries " + std::string(to_string(label)));
    }
  }
  if (image_seq.matrix.dim() != query_seq.matrix.dim() && !query_seq.labels.empty() &&
      !image_seq.labels.empty()) {
    throw Error(ErrorCode::DimMismatch, "image and query dims differ");
  }

  SegmentedSequence out{TokenMatrix(image_seq.matrix.dim()), {}};
  out.labels.reserve(image_seq.labels.size() + query_seq.labels.size());
  append_rows(out, image_seq, SegmentLabel::ImagePrefix);
  append_rows(out, image_seq, SegmentLabel::ImageContent);
  append_rows(out, query_seq, SegmentLabel::QueryPrefix);
  append_rows(out, query_seq, SegmentLabel::QueryContent);
  append_rows(out, query_seq, SegmentLabel::QuerySuffix);
  append_rows(out, image_seq, SegmentLabel::ImageSuffix);
  return out;
}

QueryEmbedding filter_query_embeddings(const SegmentedSequence& embedded) {
  validate_sequence(embedded);
  QueryEmbedding out{TokenMatrix(embedded.matrix.dim()), QueryOrigin::MultimodalFiltered};
  bool image_rows = false;
  for (std::size_t i = 0; i < embedded.labels.size(); ++i) {
    if (is_query_label(embedded.labels[i])) {
      out.matrix.append_row(embedded.matrix.row(i));
    } else {
      image_rows = true;
    }
  }
  if (out.matrix.rows() == 0) throw Error(ErrorCode::NoQueryTokens, "no query-labeled rows");
  if (!image_rows) out.origin = QueryOrigin::TextOnly;
  return out;
}

QueryEmbedding full_query_embeddings(const SegmentedSequence& embedded) {
  validate_sequence(embedded);
  if (embedded.matrix.rows() == 0) throw Error(ErrorCode::EmptyQuery, "query has no rows");
  return QueryEmbedding{embedded.matrix, QueryOrigin::MultimodalFull};
}

QueryEmbedding compose_text_query(const SegmentedSequence& query_seq) {
  validate_sequence(query_seq);
  if (query_seq.matrix.rows() == 0) throw Error(ErrorCode::EmptyQuery, "query has no rows");
  return QueryEmbedding{query_seq.matrix, QueryOrigin::TextOnly};
}

}  // namespace latefrag

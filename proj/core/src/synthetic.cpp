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

#include "latefrag/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "latefrag/error.hpp"
#include "latefrag/querying.hpp"

namespace latefrag::synth {

namespace {

void append_rows(SegmentedSequence& seq, Rng& rng, std::size_t dim, SegmentLabel label, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    seq.matrix.append_row(random_unit_row(rng, dim));
    seq.labels.push_back(label);
  }
}

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

}  // namespace

std::vector<float> random_unit_row(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (auto& x : v) x = normal(rng);
    norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  }
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

SegmentedSequence random_document(Rng& rng, std::size_t dim, const DocShape& shape) {
  if (shape.content_min == 0 || shape.content_max < shape.content_min) {
    throw Error(ErrorCode::InvalidArgument, "content range must be non-empty and positive");
  }
  std::uniform_int_distribution<std::size_t> content(shape.content_min, shape.content_max);
  SegmentedSequence seq{TokenMatrix(dim), {}};
  append_rows(seq, rng, dim, SegmentLabel::DocPrefix, shape.prefix);
  append_rows(seq, rng, dim, SegmentLabel::DocContent, content(rng));
  append_rows(seq, rng, dim, SegmentLabel::DocSuffix, shape.suffix);
  return seq;
}

SegmentedSequence random_text_query(Rng& rng, std::size_t dim, std::size_t content, std::size_t prefix,
                                    std::size_t suffix) {
  SegmentedSequence seq{TokenMatrix(dim), {}};
  append_rows(seq, rng, dim, SegmentLabel::QueryPrefix, prefix);
  append_rows(seq, rng, dim, SegmentLabel::QueryContent, content);
  append_rows(seq, rng, dim, SegmentLabel::QuerySuffix, suffix);
  return seq;
}

SegmentedSequence random_multimodal_query(Rng& rng, std::size_t dim, std::size_t image_tokens,
                                          std::size_t query_tokens) {
  SegmentedSequence image{TokenMatrix(dim), {}};
  append_rows(image, rng, dim, SegmentLabel::ImagePrefix, 1);
  append_rows(image, rng, dim, SegmentLabel::ImageContent, image_tokens);
  append_rows(image, rng, dim, SegmentLabel::ImageSuffix, 1);
  return compose_multimodal_query(image, random_text_query(rng, dim, query_tokens));
}

std::vector<std::pair<std::string, SegmentedSequence>> random_corpus(Rng& rng, std::size_t count,
                                                                     std::size_t dim, const DocShape& shape) {
  std::vector<std::pair<std::string, SegmentedSequence>> docs;
  docs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) docs.emplace_back("doc-" + std::to_string(i), random_document(rng, dim, shape));
  return docs;
}

PlantedCorpus planted_needle_corpus(const PlantedOptions& o) {
  if (o.queries > o.docs) throw Error(ErrorCode::InvalidArgument, "more queries than docs");
  if (o.query_tokens == 0) throw Error(ErrorCode::InvalidArgument, "query_tokens must be positive");
  Rng rng(o.seed);

  std::vector<std::size_t> slots(o.docs);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(o.queries);
  std::vector<std::ptrdiff_t> owner(o.docs, -1);
  for (std::size_t q = 0; q < o.queries; ++q) owner[slots[q]] = static_cast<std::ptrdiff_t>(q);

  PlantedCorpus out;
  std::vector<SegmentedSequence> query_text(o.queries);
  for (std::size_t q = 0; q < o.queries; ++q) {
    query_text[q] = random_text_query(rng, o.dim, o.query_tokens);
    std::string qid = "q-" + std::to_string(q);
    SegmentedSequence embedded = query_text[q];
    if (o.image_tokens > 0) {
      SegmentedSequence image{TokenMatrix(o.dim), {}};
      append_rows(image, rng, o.dim, SegmentLabel::ImagePrefix, 1);
      append_rows(image, rng, o.dim, SegmentLabel::ImageContent, o.image_tokens);
      append_rows(image, rng, o.dim, SegmentLabel::ImageSuffix, 1);
      embedded = compose_multimodal_query(image, query_text[q]);
    }
    out.queries.push_back({qid, std::move(embedded)});
  }

  out.docs.reserve(o.docs);
  for (std::size_t i = 0; i < o.docs; ++i) {
    std::string id = "doc-" + std::to_string(i);
    if (owner[i] < 0) {
      out.docs.emplace_back(std::move(id), random_document(rng, o.dim, o.distractor));
      continue;
    }
    const auto& text = query_text[static_cast<std::size_t>(owner[i])];
    SegmentedSequence doc{TokenMatrix(o.dim), {}};
    append_rows(doc, rng, o.dim, SegmentLabel::DocPrefix, 1);
    std::vector<std::vector<float>> content;
    for (std::size_t r = 0; r < text.matrix.rows(); ++r) {
      content.emplace_back(text.matrix.row(r).begin(), text.matrix.row(r).end());
    }
    for (std::size_t n = 0; n < o.noise_rows;) {
      auto row = random_unit_row(rng, o.dim);
      bool ok = true;
      for (std::size_t r = 0; r < text.matrix.rows() && ok; ++r) {
        ok = std::abs(dot(row, text.matrix.row(r))) <= o.max_noise_cosine;
      }
      if (ok) {
        content.push_back(std::move(row));
        ++n;
      }
    }
    std::shuffle(content.begin(), content.end(), rng);
    for (const auto& row : content) {
      doc.matrix.append_row(row);
      doc.labels.push_back(SegmentLabel::DocContent);
    }
    append_rows(doc, rng, o.dim, SegmentLabel::DocSuffix, 1);
    out.qrels.emplace(out.queries[static_cast<std::size_t>(owner[i])].query_id, id);
    out.docs.emplace_back(std::move(id), std::move(doc));
  }
  return out;
}

Fragment placeholder_fragment(const std::string& id) {
  Fragment f;
  f.fragment_id = id;
  f.page_title = id;
  f.paragraph_text = "synthetic fragment " + id;
  return f;
}

}  // namespace latefrag::synth

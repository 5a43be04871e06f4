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

#include <gtest/gtest.h>

#include "gen.hpp"
#include "latefrag/error.hpp"
#include "latefrag/querying.hpp"

namespace latefrag {
namespace {

using testing::Rng;
using L = SegmentLabel;

SegmentedSequence filled(Rng& rng, const std::vector<std::pair<L, std::size_t>>& plan, std::size_t dim = 8) {
  SegmentedSequence s{TokenMatrix(dim), {}};
  for (const auto& [label, n] : plan) {
    s.matrix.append(testing::random_matrix(rng, n, dim));
    s.labels.insert(s.labels.end(), n, label);
  }
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(ComposeMultimodal, RowArithmeticAndNoInstructionRows) {
  Rng rng(1);
  const auto image = filled(rng, {{L::ImagePrefix, 4}, {L::ImageContent, 256}, {L::InstructionText, 5}, {L::ImageSuffix, 2}});
  const auto query = filled(rng, {{L::QueryPrefix, 1}, {L::QueryContent, 8}, {L::QuerySuffix, 1}});
  const auto out = compose_multimodal_query(image, query);
  EXPECT_EQ(out.matrix.rows(), 272u);
  EXPECT_EQ(count_label(out, L::InstructionText), 0u);
  EXPECT_EQ(out.labels, multimodal_layout(4, 256, 1, 8, 1, 2).labels());
  EXPECT_NO_THROW(validate_sequence(out));
}

TEST(ComposeMultimodal, OneTokenQuery) {
  Rng rng(2);
  const auto image = filled(rng, {{L::ImagePrefix, 3}, {L::ImageContent, 16}, {L::ImageSuffix, 1}});
  const auto query = filled(rng, {{L::QueryContent, 1}});
  EXPECT_EQ(compose_multimodal_query(image, query).matrix.rows(), 3u + 16u + 1u + 1u);
}

TEST(ComposeMultimodal, Errors) {
  Rng rng(3);
  const auto no_patches = filled(rng, {{L::ImagePrefix, 3}, {L::ImageSuffix, 1}});
  const auto query = filled(rng, {{L::QueryContent, 2}});
  EXPECT_EQ(code_of([&] { compose_multimodal_query(no_patches, query); }), ErrorCode::MissingSegment);
  const auto image = filled(rng, {{L::ImageContent, 2}});
  const auto no_content = filled(rng, {{L::QueryPrefix, 1}, {L::QuerySuffix, 1}});
  EXPECT_EQ(code_of([&] { compose_multimodal_query(image, no_content); }), ErrorCode::MissingSegment);
}

TEST(ComposeMultimodal, ContentRowsRecoveredExactly) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto image = filled(rng, {{L::ImagePrefix, testing::uniform(rng, 0, 3)},
                                    {L::ImageContent, testing::uniform(rng, 1, 40)},
                                    {L::InstructionText, testing::uniform(rng, 0, 4)},
                                    {L::ImageSuffix, testing::uniform(rng, 0, 2)}});
    const auto query = filled(rng, {{L::QueryPrefix, testing::uniform(rng, 0, 2)},
                                    {L::QueryContent, testing::uniform(rng, 1, 20)},
                                    {L::QuerySuffix, testing::uniform(rng, 0, 2)}});
    const auto out = compose_multimodal_query(image, query);
    EXPECT_EQ(extract_segment(out, L::QueryContent), extract_segment(query, L::QueryContent));
    EXPECT_EQ(extract_segment(out, L::ImageContent), extract_segment(image, L::ImageContent));
    EXPECT_EQ(filter_query_embeddings(out).matrix, query.matrix);
  }
}

TEST(FilterQuery, KeepsOnlyTextRows) {
  Rng rng(5);
  const auto seq = filled(rng, {{L::ImagePrefix, 4}, {L::ImageContent, 256}, {L::QueryPrefix, 1},
                                {L::QueryContent, 8}, {L::QuerySuffix, 1}, {L::ImageSuffix, 2}});
  const auto q = filter_query_embeddings(seq);
  EXPECT_EQ(q.matrix.rows(), 10u);
  EXPECT_EQ(q.origin, QueryOrigin::MultimodalFiltered);
  EXPECT_EQ(q.matrix, seq.matrix.slice(260, 10));
}

TEST(FilterQuery, TextOnlyIsIdentity) {
  Rng rng(6);
  const auto seq = filled(rng, {{L::QueryPrefix, 2}, {L::QueryContent, 9}, {L::QuerySuffix, 1}});
  const auto q = filter_query_embeddings(seq);
  EXPECT_EQ(q.matrix, seq.matrix);
  EXPECT_EQ(q.origin, QueryOrigin::TextOnly);
}

TEST(FilterQuery, NoQueryRows) {
  Rng rng(7);
  const auto seq = filled(rng, {{L::ImagePrefix, 1}, {L::ImageContent, 3}});
  EXPECT_EQ(code_of([&] { filter_query_embeddings(seq); }), ErrorCode::NoQueryTokens);
}

TEST(FilterQuery, CountIndependentOfImageSize) {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const std::size_t image_tokens = testing::uniform(rng, 16, 1280), q_tokens = testing::uniform(rng, 1, 64);
    const auto image = filled(rng, {{L::ImagePrefix, 2}, {L::ImageContent, image_tokens}, {L::ImageSuffix, 1}}, 4);
    const auto query = filled(rng, {{L::QueryContent, q_tokens}}, 4);
    EXPECT_EQ(filter_query_embeddings(compose_multimodal_query(image, query)).matrix.rows(), q_tokens);
  }
}

TEST(TextQuery, Passthrough) {
  Rng rng(9);
  for (std::size_t n : {7u, 1u}) {
    const auto seq = filled(rng, {{L::QueryContent, n}});
    const auto q = compose_text_query(seq);
    EXPECT_EQ(q.matrix.rows(), n);
    EXPECT_EQ(q.origin, QueryOrigin::TextOnly);
  }
  EXPECT_EQ(code_of([] { compose_text_query({TokenMatrix(8), {}}); }), ErrorCode::EmptyQuery);
}

TEST(QueryLayout, TextLayoutLabels) {
  const auto layout = text_layout(1, 3, 2);
  EXPECT_EQ(layout.total(), 6u);
  EXPECT_EQ(layout.labels(), (std::vector<L>{L::QueryPrefix, L::QueryContent, L::QueryContent, L::QueryContent,
                                             L::QuerySuffix, L::QuerySuffix}));
}

}  // namespace
}  // namespace latefrag

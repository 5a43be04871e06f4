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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gen.hpp"
#include "latefrag/compress.hpp"
#include "latefrag/error.hpp"
#include "latefrag/scoring.hpp"

namespace latefrag {
namespace {

using testing::Rng;

BitMatrix bits(std::initializer_list<std::string_view> rows) {
  std::vector<std::string_view> v(rows);
  return BitMatrix::from_strings(v);
}

TEST(BitVector, LayoutIsLsbFirst) {
  const auto v = BitVector::from_string("1000000001");
  ASSERT_EQ(v.bytes().size(), 2u);
  EXPECT_EQ(v.bytes()[0], 0x01);
  EXPECT_EQ(v.bytes()[1], 0x02);
  EXPECT_EQ(v.to_string(), "1000000001");
}

TEST(BitVector, PadBitsMustBeZero) {
  EXPECT_THROW(BitVector(4, {0x10}), Error);
  EXPECT_NO_THROW(BitVector(4, {0x0f}));
}

TEST(MaxSimExact, WorkedExample) {
  const auto q = TokenMatrix::from_rows({{1, 0}, {0, 1}});
  const auto d = TokenMatrix::from_rows({{0.6f, 0.8f}, {1, 0}});
  // Row 1 best is 1.0 (doc row 2), row 2 best is 0.8 (doc row 1).
  EXPECT_NEAR(maxsim_exact(q, d), 1.8, 1e-6);
}

TEST(MaxSimExact, SelfScoreOfUnitRow) {
  const auto v = TokenMatrix::from_rows({{0.6f, 0.8f}});
  EXPECT_NEAR(maxsim_exact(v, v), 1.0, 1e-6);
}

TEST(MaxSimExact, EmptyQueryScoresZero) {
  EXPECT_EQ(maxsim_exact(TokenMatrix(2), TokenMatrix::from_rows({{1, 0}})), 0.0);
}

TEST(MaxSimExact, Errors) {
  EXPECT_THROW(maxsim_exact(TokenMatrix::from_rows({{1, 0}}), TokenMatrix(2)), Error);
  EXPECT_THROW(maxsim_exact(TokenMatrix::from_rows({{1, 0}}), TokenMatrix::from_rows({{1, 0, 0}})), Error);
}

TEST(MaxSimBinarySym, Examples) {
  EXPECT_EQ(maxsim_binary_sym(bits({"1010"}).view(), bits({"1010"}).view()), 4);
  EXPECT_EQ(maxsim_binary_sym(bits({"1111"}).view(), bits({"0000"}).view()), -4);
  // hamming(1100,1010)=2 -> 0; hamming(1100,1110)=1 -> 2.
  EXPECT_EQ(maxsim_binary_sym(bits({"1100"}).view(), bits({"1010", "1110"}).view()), 2);
}

TEST(MaxSimBinarySym, Errors) {
  EXPECT_THROW(maxsim_binary_sym(bits({"1100"}).view(), BitMatrix(4).view()), Error);
  EXPECT_THROW(maxsim_binary_sym(bits({"1100"}).view(), bits({"11001"}).view()), Error);
}

TEST(MaxSimAsym, Examples) {
  EXPECT_NEAR(maxsim_asym(TokenMatrix::from_rows({{1, 0, 0, 0}}), bits({"1000"}).view()), 0.5, 1e-12);
  EXPECT_NEAR(maxsim_asym(TokenMatrix::from_rows({{0, 0, 0, 0}}), bits({"1000"}).view()), 0.0, 1e-12);
  EXPECT_NEAR(maxsim_asym(TokenMatrix::from_rows({{0.5f, 0.5f, 0.5f, 0.5f}}), bits({"1111"}).view()), 1.0, 1e-12);
}

TEST(MaxSimAsym, Errors) {
  EXPECT_THROW(maxsim_asym(TokenMatrix::from_rows({{1, 0, 0, 0}}), BitMatrix(4).view()), Error);
  EXPECT_THROW(maxsim_asym(TokenMatrix::from_rows({{1, 0, 0}}), bits({"1000"}).view()), Error);
  EXPECT_THROW(AsymScorer(TokenMatrix::from_rows({{1, 0, 0}})).score(bits({"1000"}).view()), Error);
}

TEST(Hamming, MatchesBitCount) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = testing::uniform(rng, 1, 300);
    const auto m = testing::random_bits(rng, 2, d);
    std::size_t naive = 0;
    for (std::size_t j = 0; j < d; ++j) naive += m.row(0).test(j) != m.row(1).test(j);
    EXPECT_EQ(hamming_distance(m.view().row(0), m.view().row(1)), naive);
  }
}

TEST(KernelOracle, RandomInstancesMatchNaive) {
  Rng rng(17);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = testing::uniform(rng, 1, 32), m = testing::uniform(rng, 1, 32);
    const std::size_t d = testing::uniform(rng, 1, 32);
    const auto q = testing::random_matrix(rng, n, d);
    const auto doc = testing::random_matrix(rng, m, d);
    const auto qb = testing::random_bits(rng, n, d);
    const auto db = testing::random_bits(rng, m, d);
    const double inv = 1.0 / std::sqrt(double(d));

    EXPECT_TRUE(testing::close_rel(maxsim_exact(q, doc), testing::maxsim_naive(testing::to_rows(q), testing::to_rows(doc)), 1e-6));
    const double sym = testing::maxsim_naive(testing::decode_naive(qb, 1.0), testing::decode_naive(db, 1.0));
    EXPECT_EQ(double(maxsim_binary_sym(qb.view(), db.view())), sym);
    const double asym = testing::maxsim_naive(testing::to_rows(q), testing::decode_naive(db, inv));
    EXPECT_TRUE(testing::close_rel(maxsim_asym(q, db.view()), asym, 1e-6));
    EXPECT_TRUE(testing::close_rel(AsymScorer(q).score(db.view()), asym, 1e-6));
    // Binary kernel equals the exact kernel on decoded inputs.
    EXPECT_EQ(double(maxsim_binary_sym(qb.view(), db.view())),
              maxsim_exact(decode_bits(qb.view(), 1.0), decode_bits(db.view(), 1.0)));
  }
}

TEST(KernelOracle, WideDimsUseWordPaths) {
  Rng rng(23);
  for (std::size_t d : {64u, 128u, 256u, 130u, 200u}) {
    const auto qb = testing::random_bits(rng, 7, d);
    const auto db = testing::random_bits(rng, 9, d);
    const double sym = testing::maxsim_naive(testing::decode_naive(qb, 1.0), testing::decode_naive(db, 1.0));
    EXPECT_EQ(double(maxsim_binary_sym(qb.view(), db.view())), sym) << d;
    EXPECT_EQ(BinaryQuery(decode_bits(qb.view(), 0.25)).score(db.view()), maxsim_binary_sym(qb.view(), db.view()));
  }
}

TEST(KernelProperties, PermutationInvariance) {
  Rng rng(29);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = testing::uniform(rng, 1, 24);
    const auto q = testing::random_matrix(rng, testing::uniform(rng, 1, 10), d);
    const auto doc = testing::random_matrix(rng, testing::uniform(rng, 1, 10), d);
    std::vector<std::size_t> qp(q.rows()), dp(doc.rows());
    std::iota(qp.begin(), qp.end(), 0);
    std::iota(dp.begin(), dp.end(), 0);
    std::shuffle(qp.begin(), qp.end(), rng);
    std::shuffle(dp.begin(), dp.end(), rng);
    TokenMatrix q2(d), d2(d);
    for (auto i : qp) q2.append_row(q.row(i));
    for (auto i : dp) d2.append_row(doc.row(i));
    EXPECT_NEAR(maxsim_exact(q, doc), maxsim_exact(q2, d2), 1e-9);
    const auto b1 = binarize_rows(doc), b2 = binarize_rows(d2);
    EXPECT_NEAR(maxsim_asym(q, b1.view()), maxsim_asym(q2, b2.view()), 1e-9);
    EXPECT_EQ(maxsim_binary_sym(binarize_rows(q).view(), b1.view()), maxsim_binary_sym(binarize_rows(q2).view(), b2.view()));
  }
}

TEST(KernelProperties, DocMonotoneAndQueryAdditive) {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = testing::uniform(rng, 1, 24);
    const auto q1 = testing::random_matrix(rng, testing::uniform(rng, 1, 8), d);
    const auto q2 = testing::random_matrix(rng, testing::uniform(rng, 1, 8), d);
    const auto doc = testing::random_matrix(rng, testing::uniform(rng, 1, 8), d);
    auto bigger = doc;
    bigger.append(testing::random_matrix(rng, 1, d));
    EXPECT_GE(maxsim_exact(q1, bigger), maxsim_exact(q1, doc));
    EXPECT_GE(maxsim_asym(q1, binarize_rows(bigger).view()), maxsim_asym(q1, binarize_rows(doc).view()));
    auto both = q1;
    both.append(q2);
    EXPECT_NEAR(maxsim_exact(both, doc), maxsim_exact(q1, doc) + maxsim_exact(q2, doc), 1e-9);
    const auto db = binarize_rows(doc);
    EXPECT_EQ(maxsim_binary_sym(binarize_rows(both).view(), db.view()),
              maxsim_binary_sym(binarize_rows(q1).view(), db.view()) + maxsim_binary_sym(binarize_rows(q2).view(), db.view()));
  }
}

}  // namespace
}  // namespace latefrag

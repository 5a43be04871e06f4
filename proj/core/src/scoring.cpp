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

#include "latefrag/scoring.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "latefrag/compress.hpp"
#include "latefrag/error.hpp"

namespace latefrag {

namespace {

std::uint8_t pad_mask(std::size_t dim) noexcept {
  const std::size_t used = dim % 8;
  return used == 0 ? 0 : static_cast<std::uint8_t>(0xFFU << used);
}

void check_pad_bits(std::size_t dim, std::span<const std::uint8_t> bytes) {
  const std::size_t stride = packed_bytes(dim);
  const std::uint8_t mask = pad_mask(dim);
  if (mask == 0 || stride == 0) return;
  for (std::size_t off = stride - 1; off < bytes.size(); off += stride) {
    if (bytes[off] & mask) throw Error(ErrorCode::InvalidArgument, "pad bits set");
  }
}

void check_doc(std::size_t query_rows, std::size_t query_dim, std::size_t doc_rows,
               std::size_t doc_dim) {
  if (doc_rows == 0) throw Error(ErrorCode::EmptyDocument, "document has no vectors");
  if (query_rows > 0 && query_dim != doc_dim) {
    throw Error(ErrorCode::DimMismatch, "query dim " + std::to_string(query_dim) +
                                            " vs doc dim " + std::to_string(doc_dim));
  }
}

template <std::size_t Words>
std::size_t hamming_words(const std::uint8_t* a, const std::uint8_t* b) noexcept {
  std::size_t total = 0;
  for (std::size_t w = 0; w < Words; ++w) {
    std::uint64_t x, y;
    std::memcpy(&x, a + 8 * w, 8);
    std::memcpy(&y, b + 8 * w, 8);
    total += static_cast<std::size_t>(std::popcount(x ^ y));
  }
  return total;
}

template <std::size_t Words>
std::int64_t binary_sym_fixed(BitMatrixView query, BitMatrixView doc) noexcept {
  const auto dim = static_cast<std::int64_t>(query.dim);
  const std::uint8_t* q = query.bytes.data();
  const std::uint8_t* d = doc.bytes.data();
  std::int64_t total = 0;
  for (std::size_t i = 0; i < query.count; ++i, q += 8 * Words) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    const std::uint8_t* row = d;
    for (std::size_t j = 0; j < doc.count; ++j, row += 8 * Words) {
      best = std::min(best, hamming_words<Words>(q, row));
    }
    total += dim - 2 * static_cast<std::int64_t>(best);
  }
  return total;
}

}  // namespace

BitVector::BitVector(std::size_t dim, std::vector<std::uint8_t> bytes)
    : dim_(dim), bytes_(std::move(bytes)) {
  if (bytes_.size() != packed_bytes(dim_)) {
    throw Error(ErrorCode::InvalidArgument, "bit vector byte count does not match dim");
  }
  check_pad_bits(dim_, bytes_);
}

BitVector BitVector::from_string(std::string_view bits) {
  BitVector v(bits.size());
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j] != '0' && bits[j] != '1') {
      throw Error(ErrorCode::InvalidArgument, "bit string may only hold 0 and 1");
    }
    v.set(j, bits[j] == '1');
  }
  return v;
}

std::string BitVector::to_string() const {
  std::string out(dim_, '0');
  for (std::size_t j = 0; j < dim_; ++j) {
    if (test(j)) out[j] = '1';
  }
  return out;
}

BitMatrix::BitMatrix(std::size_t dim, std::vector<std::uint8_t> bytes)
    : dim_(dim), bytes_(std::move(bytes)) {
  if (dim_ == 0 || bytes_.size() % packed_bytes(dim_) != 0) {
    throw Error(ErrorCode::InvalidArgument, "bit matrix byte count does not match dim");
  }
  check_pad_bits(dim_, bytes_);
}

BitMatrix BitMatrix::from_strings(std::span<const std::string_view> rows) {
  if (rows.empty()) return BitMatrix{};
  BitMatrix m(rows.front().size());
  for (auto r : rows) m.append(BitVector::from_string(r));
  return m;
}

BitVector BitMatrix::row(std::size_t i) const {
  const std::size_t stride = packed_bytes(dim_);
  return BitVector(dim_, std::vector<std::uint8_t>(
                             bytes_.begin() + static_cast<std::ptrdiff_t>(i * stride),
                             bytes_.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride)));
}

void BitMatrix::append(const BitVector& v) {
  if (dim_ == 0 && bytes_.empty()) dim_ = v.dim();
  if (v.dim() != dim_) throw Error(ErrorCode::DimMismatch, "bit matrix append");
  bytes_.insert(bytes_.end(), v.bytes().begin(), v.bytes().end());
}

std::size_t hamming_distance(std::span<const std::uint8_t> a,
                             std::span<const std::uint8_t> b) noexcept {
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t total = 0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    std::uint64_t x, y;
    std::memcpy(&x, a.data() + i, 8);
    std::memcpy(&y, b.data() + i, 8);
    total += static_cast<std::size_t>(std::popcount(x ^ y));
  }
  for (; i < n; ++i) {
    total += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(a[i] ^ b[i])));
  }
  return total;
}

Score maxsim_exact(const TokenMatrix& query, const TokenMatrix& doc) {
  check_doc(query.rows(), query.dim(), doc.rows(), doc.dim());
  Score total = 0.0;
  const std::size_t dim = doc.dim();
  for (std::size_t i = 0; i < query.rows(); ++i) {
    const auto q = query.row(i);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < doc.rows(); ++j) {
      const auto d = doc.row(j);
      double dot = 0.0;
      for (std::size_t t = 0; t < dim; ++t) dot += static_cast<double>(q[t]) * d[t];
      best = std::max(best, dot);
    }
    total += best;
  }
  return total;
}

std::int64_t maxsim_binary_sym(BitMatrixView query, BitMatrixView doc) {
  check_doc(query.count, query.dim, doc.count, doc.dim);
  if (query.count == 0) return 0;
  switch (query.stride()) {
    case 8: return binary_sym_fixed<1>(query, doc);
    case 16: return binary_sym_fixed<2>(query, doc);
    case 32: return binary_sym_fixed<4>(query, doc);
    default: break;
  }
  const auto dim = static_cast<std::int64_t>(query.dim);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < query.count; ++i) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t j = 0; j < doc.count; ++j) {
      best = std::min(best, hamming_distance(query.row(i), doc.row(j)));
    }
    total += dim - 2 * static_cast<std::int64_t>(best);
  }
  return total;
}

Score maxsim_asym(const TokenMatrix& query, BitMatrixView doc) {
  check_doc(query.rows(), query.dim(), doc.count, doc.dim);
  const std::size_t dim = doc.dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  Score total = 0.0;
  for (std::size_t i = 0; i < query.rows(); ++i) {
    const auto q = query.row(i);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < doc.count; ++j) {
      const auto bits = doc.row(j);
      double dot = 0.0;
      for (std::size_t t = 0; t < dim; ++t) {
        const bool one = (bits[t >> 3] >> (t & 7)) & 1U;
        dot += one ? static_cast<double>(q[t]) : -static_cast<double>(q[t]);
      }
      best = std::max(best, dot * scale);
    }
    total += best;
  }
  return total;
}

TokenMatrix decode_bits(BitMatrixView bits, double magnitude) {
  std::vector<float> values;
  values.reserve(bits.count * bits.dim);
  for (std::size_t j = 0; j < bits.count; ++j) {
    const auto row = bits.row(j);
    for (std::size_t t = 0; t < bits.dim; ++t) {
      const bool one = (row[t >> 3] >> (t & 7)) & 1U;
      values.push_back(static_cast<float>(one ? magnitude : -magnitude));
    }
  }
  return TokenMatrix(bits.dim, std::move(values));
}

AsymScorer::AsymScorer(const TokenMatrix& query)
    : dim_(query.dim()), rows_(query.rows()), stride_(packed_bytes(query.dim())) {
  table_.assign(rows_ * stride_ * 256, 0.0);
  const double scale = dim_ == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(dim_));
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto q = query.row(i);
    for (std::size_t p = 0; p < stride_; ++p) {
      double coord[8] = {};
      for (std::size_t t = 0; t < 8 && 8 * p + t < dim_; ++t) coord[t] = q[8 * p + t];
      double* entry = table_.data() + (i * stride_ + p) * 256;
      for (unsigned byte = 0; byte < 256; ++byte) {
        double sum = 0.0;
        for (unsigned t = 0; t < 8; ++t) sum += ((byte >> t) & 1U) ? coord[t] : -coord[t];
        entry[byte] = sum * scale;
      }
    }
  }
}

Score AsymScorer::score(BitMatrixView doc) const {
  check_doc(rows_, dim_, doc.count, doc.dim);
  Score total = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* tables = table_.data() + i * stride_ * 256;
    double best = -std::numeric_limits<double>::infinity();
    const std::uint8_t* row = doc.bytes.data();
    for (std::size_t j = 0; j < doc.count; ++j, row += stride_) {
      double dot = 0.0;
      for (std::size_t p = 0; p < stride_; ++p) dot += tables[p * 256 + row[p]];
      best = std::max(best, dot);
    }
    total += best;
  }
  return total;
}

BinaryQuery::BinaryQuery(const TokenMatrix& query) : bits_(binarize_rows(query)) {}

std::int64_t BinaryQuery::score(BitMatrixView doc) const {
  return maxsim_binary_sym(bits_.view(), doc);
}

}  // namespace latefrag

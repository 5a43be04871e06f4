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
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "latefrag/types.hpp"

namespace latefrag {

using Score = double;

constexpr std::size_t packed_bytes(std::size_t dim) noexcept { return (dim + 7) / 8; }

/// Sign-bit vector. Bit j lives in byte j/8 at position j%8 (LSB first);
/// pad bits past `dim` are always zero.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t dim) : dim_(dim), bytes_(packed_bytes(dim), 0) {}
  /// Throws Error(InvalidArgument) if the size is wrong or pad bits are set.
  BitVector(std::size_t dim, std::vector<std::uint8_t> bytes);

  /// Parses "1010"-style strings; character j is bit j.
  static BitVector from_string(std::string_view bits);

  std::size_t dim() const noexcept { return dim_; }
  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

  bool test(std::size_t j) const noexcept { return (bytes_[j >> 3] >> (j & 7)) & 1U; }
  void set(std::size_t j, bool value) noexcept {
    const auto mask = static_cast<std::uint8_t>(1U << (j & 7));
    if (value) {
      bytes_[j >> 3] |= mask;
    } else {
      bytes_[j >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }

  std::string to_string() const;

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::uint8_t> bytes_;
};

/// Non-owning view over `count` contiguous packed bit vectors of one dim.
struct BitMatrixView {
  std::span<const std::uint8_t> bytes;
  std::size_t dim = 0;
  std::size_t count = 0;

  std::size_t stride() const noexcept { return packed_bytes(dim); }
  std::span<const std::uint8_t> row(std::size_t i) const noexcept {
    return bytes.subspan(i * stride(), stride());
  }
};

/// Owning list of bit vectors stored back to back.
class BitMatrix {
 public:
  BitMatrix() = default;
  explicit BitMatrix(std::size_t dim) : dim_(dim) {}
  BitMatrix(std::size_t dim, std::vector<std::uint8_t> bytes);

  static BitMatrix from_strings(std::span<const std::string_view> rows);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept {
    return dim_ == 0 ? 0 : bytes_.size() / packed_bytes(dim_);
  }
  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
  BitMatrixView view() const noexcept { return {bytes_, dim_, count()}; }
  BitVector row(std::size_t i) const;

  void append(const BitVector& v);

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::uint8_t> bytes_;
};

std::size_t hamming_distance(std::span<const std::uint8_t> a,
                             std::span<const std::uint8_t> b) noexcept;

/// Sum over query rows of the best dot product against any doc row.
/// Throws Error(DimMismatch) or Error(EmptyDocument).
Score maxsim_exact(const TokenMatrix& query, const TokenMatrix& doc);

/// MaxSim over +/-1 vectors: each pair scores dim - 2 * hamming.
std::int64_t maxsim_binary_sym(BitMatrixView query, BitMatrixView doc);

/// MaxSim of a full-precision query against doc bits decoded to
/// {-1/sqrt(d), +1/sqrt(d)}.
Score maxsim_asym(const TokenMatrix& query, BitMatrixView doc);

/// Decodes bits to +/-`magnitude` per coordinate.
TokenMatrix decode_bits(BitMatrixView bits, double magnitude);

/// maxsim_asym with the query preprocessed into per-byte lookup tables:
/// for every query row and byte position, the signed partial dot product
/// for all 256 byte values. Scoring a doc row then costs ceil(d/8) lookups.
class AsymScorer {
 public:
  explicit AsymScorer(const TokenMatrix& query);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t query_rows() const noexcept { return rows_; }

  Score score(BitMatrixView doc) const;

 private:
  std::size_t dim_;
  std::size_t rows_;
  std::size_t stride_;
  std::vector<double> table_;  // rows x stride x 256
};

/// Query bits prepared once for repeated symmetric scoring.
class BinaryQuery {
 public:
  explicit BinaryQuery(const TokenMatrix& query);

  std::size_t dim() const noexcept { return bits_.dim(); }
  BitMatrixView view() const noexcept { return bits_.view(); }

  std::int64_t score(BitMatrixView doc) const;

 private:
  BitMatrix bits_;
};

}  // namespace latefrag

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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "latefrag/types.hpp"

namespace latefrag {

inline constexpr char kEmbeddingMagic[4] = {'L', 'F', 'E', 'M'};
inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

/// One embedded document or query.
struct EmbeddingRecord {
  std::string id;
  SegmentedSequence sequence;
};

// Layout, all little-endian:
//   magic "LFEM", u32 version, u32 dim, u64 record count
//   per record: u32 id length, id bytes (UTF-8), u32 row count n,
//               n label bytes, n * dim float32
std::vector<std::uint8_t> encode_embeddings(std::span<const EmbeddingRecord> records, std::size_t dim);

/// Throws Error(ParseError) on a bad header, truncated or trailing payload,
/// or unknown label codes, and Error(DimMismatch) when a record's matrix
/// has the wrong width.
std::vector<EmbeddingRecord> decode_embeddings(std::span<const std::uint8_t> bytes);

void write_embedding_file(const std::filesystem::path& path, std::span<const EmbeddingRecord> records,
                          std::size_t dim);
std::vector<EmbeddingRecord> read_embedding_file(const std::filesystem::path& path);

}  // namespace latefrag

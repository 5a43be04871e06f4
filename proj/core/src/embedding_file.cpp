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

#include "latefrag/embedding_file.hpp"

#include <cstring>

#include "byte_io.hpp"
#include "latefrag/error.hpp"

namespace latefrag {

std::vector<std::uint8_t> encode_embeddings(std::span<const EmbeddingRecord> records, std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dim must be positive");
  std::vector<std::uint8_t> out(std::begin(kEmbeddingMagic), std::end(kEmbeddingMagic));
  detail::put_le<std::uint32_t>(out, kEmbeddingFormatVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim));
  detail::put_le<std::uint64_t>(out, records.size());
  for (const auto& rec : records) {
    const auto& seq = rec.sequence;
    if (seq.matrix.rows() > 0 && seq.matrix.dim() != dim) {
      throw Error(ErrorCode::DimMismatch, "record '" + rec.id + "' has dim " +
                                              std::to_string(seq.matrix.dim()));
    }
    if (seq.labels.size() != seq.matrix.rows()) {
      throw Error(ErrorCode::LengthMismatch, "record '" + rec.id + "': labels vs rows");
    }
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.id.size()));
    out.insert(out.end(), rec.id.begin(), rec.id.end());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(seq.labels.size()));
    for (auto l : seq.labels) out.push_back(static_cast<std::uint8_t>(l));
    for (float v : seq.matrix.values()) detail::put_f32(out, v);
  }
  return out;
}

namespace {

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::ParseError, std::string("truncated ") + what + " at byte " + std::to_string(pos_));
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T le(const char* what) {
    return detail::get_le<T>(take(sizeof(T), what));
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<EmbeddingRecord> decode_embeddings(std::span<const std::uint8_t> bytes) {
  Cursor in(bytes);
  if (std::memcmp(in.take(4, "magic"), kEmbeddingMagic, 4) != 0) {
    throw Error(ErrorCode::ParseError, "not an embedding file (bad magic)");
  }
  const auto version = in.le<std::uint32_t>("version");
  if (version != kEmbeddingFormatVersion) {
    throw Error(ErrorCode::VersionUnsupported, "embedding file version " + std::to_string(version));
  }
  const auto dim = in.le<std::uint32_t>("dim");
  if (dim == 0) throw Error(ErrorCode::ParseError, "dim is zero");
  const auto count = in.le<std::uint64_t>("record count");

  std::vector<EmbeddingRecord> records;
  // Each record needs at least 8 bytes, which bounds a hostile count.
  if (count > in.remaining() / 8) throw Error(ErrorCode::ParseError, "record count exceeds payload");
  records.reserve(count);
  for (std::uint64_t r = 0; r < count; ++r) {
    EmbeddingRecord rec;
    const auto id_len = in.le<std::uint32_t>("id length");
    const auto* id = in.take(id_len, "id");
    rec.id.assign(reinterpret_cast<const char*>(id), id_len);
    const auto rows = in.le<std::uint32_t>("row count");
    const auto* labels = in.take(rows, "labels");
    rec.sequence.labels.reserve(rows);
    for (std::uint32_t i = 0; i < rows; ++i) {
      auto label = segment_label_from_code(labels[i]);
      if (!label) {
        throw Error(ErrorCode::ParseError, "record " + std::to_string(r) + ": unknown label code " +
                                               std::to_string(labels[i]));
      }
      rec.sequence.labels.push_back(*label);
    }
    const std::size_t n = static_cast<std::size_t>(rows) * dim;
    if (n / dim != rows || n > in.remaining() / 4) {
      throw Error(ErrorCode::ParseError, "record " + std::to_string(r) + ": truncated values");
    }
    const auto* p = in.take(n * 4, "values");
    std::vector<float> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = detail::get_f32(p + 4 * i);
    rec.sequence.matrix = TokenMatrix(dim, std::move(values));
    records.push_back(std::move(rec));
  }
  if (!in.done()) throw Error(ErrorCode::ParseError, "trailing bytes after last record");
  return records;
}

void write_embedding_file(const std::filesystem::path& path, std::span<const EmbeddingRecord> records,
                          std::size_t dim) {
  detail::write_file(path, encode_embeddings(records, dim));
}

std::vector<EmbeddingRecord> read_embedding_file(const std::filesystem::path& path) {
  return decode_embeddings(detail::read_file(path));
}

}  // namespace latefrag

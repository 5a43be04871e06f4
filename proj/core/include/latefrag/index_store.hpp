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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "latefrag/compress.hpp"
#include "latefrag/scoring.hpp"
#include "latefrag/types.hpp"

namespace latefrag {

inline constexpr std::uint32_t kIndexFormatVersion = 1;

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kTier1File = "tier1.bin";
inline constexpr const char* kTier2File = "tier2.bin";
inline constexpr const char* kOffsetsFile = "offsets.bin";
inline constexpr const char* kDocmapFile = "docmap.tsv";

struct FileDigest {
  std::uint64_t bytes = 0;
  std::uint32_t crc32 = 0;

  friend bool operator==(const FileDigest&, const FileDigest&) = default;
};

struct IndexManifest {
  std::uint32_t format_version = kIndexFormatVersion;
  std::size_t dim = kDefaultDim;
  std::size_t k = kDefaultClusters;
  std::size_t max_vectors = kDefaultMaxVectors;
  std::size_t doc_count = 0;
  bool normalized = true;
  std::vector<std::uint32_t> per_doc_pooled_counts;
  std::map<std::string, FileDigest> files;

  /// Sum over docs of pooled count * ceil(dim / 8).
  std::uint64_t predicted_tier1_bytes() const noexcept;

  std::string to_json() const;
  /// Throws Error(CorruptManifest) on malformed JSON or missing fields.
  static IndexManifest from_json(const std::string& text);

  friend bool operator==(const IndexManifest&, const IndexManifest&) = default;
};

struct BuildOptions {
  std::size_t dim = kDefaultDim;
  std::size_t k = kDefaultClusters;
  std::size_t max_vectors = kDefaultMaxVectors;
  /// L2-normalize every row before pooling. Zero rows are rejected.
  bool normalize = true;
  /// Worker threads for per-document pooling; 0 picks hardware concurrency.
  std::size_t threads = 0;
  std::size_t batch_size = 1024;
};

/// Two-tier binarized index. Tier 1 holds the pooled vectors of every doc
/// contiguously in memory; tier 2 holds every doc's full binarized record
/// and is file-backed when opened from disk. Copies share storage and are
/// safe to read concurrently.
class Index {
 public:
  Index() = default;

  const IndexManifest& manifest() const noexcept { return manifest_; }
  std::size_t size() const noexcept { return manifest_.doc_count; }
  std::size_t dim() const noexcept { return manifest_.dim; }

  BitMatrixView pooled(DocId id) const;
  BitMatrixView full(DocId id) const;
  PooledDoc pooled_doc(DocId id) const;
  FullDoc full_doc(DocId id) const;

  const std::string& fragment_id(DocId id) const;
  std::optional<DocId> find(const std::string& fragment_id) const;

  std::span<const std::uint8_t> tier1_bytes() const noexcept { return tier1_; }
  std::span<const std::uint8_t> tier2_bytes() const noexcept { return tier2_; }
  std::span<const std::uint64_t> tier2_offsets() const noexcept { return offsets_; }

 private:
  friend class IndexBuilder;
  friend Index open_index(const std::filesystem::path& dir);

  void finalize_lookup();

  IndexManifest manifest_;
  std::vector<std::uint8_t> tier1_;
  std::vector<std::uint64_t> tier1_offsets_;
  std::shared_ptr<const void> tier2_owner_;
  std::span<const std::uint8_t> tier2_;
  std::vector<std::uint64_t> offsets_;
  std::vector<std::string> docmap_;
  std::shared_ptr<const std::unordered_map<std::string, DocId>> by_fragment_;
};

/// Streams documents into an in-memory Index. DocIds are assigned densely
/// in the order documents are added. Documents are pooled in batches,
/// in parallel within a batch; output is independent of thread count.
class IndexBuilder {
 public:
  explicit IndexBuilder(BuildOptions options);

  /// Throws Error(DimMismatch), Error(InvalidArgument) for duplicate or
  /// unstorable fragment ids, and any pooling error. Errors surface at the
  /// latest by finish().
  void add(std::string fragment_id, SegmentedSequence doc);

  std::size_t added() const noexcept { return ids_.size(); }

  /// Throws Error(EmptyCorpus) when nothing was added.
  Index finish();

 private:
  void flush();

  BuildOptions options_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> seen_;
  std::vector<SegmentedSequence> pending_;
  std::vector<std::uint8_t> tier1_;
  std::vector<std::uint8_t> tier2_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<std::uint32_t> pooled_counts_;
};

/// Writes manifest.json, tier1.bin, tier2.bin, offsets.bin and docmap.tsv.
/// Output bytes depend only on the index contents. Throws Error(IoFailure).
void write_index(const Index& index, const std::filesystem::path& dir);

/// Builds in memory and persists to `dir`.
Index build_index(const std::vector<std::pair<std::string, SegmentedSequence>>& docs,
                  const BuildOptions& options, const std::filesystem::path& dir);

/// Validates checksums and counts, loads tier 1 and maps tier 2. Throws
/// Error(IoFailure), Error(CorruptManifest), Error(ChecksumMismatch) or
/// Error(VersionUnsupported).
Index open_index(const std::filesystem::path& dir);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) noexcept;

}  // namespace latefrag

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

#include "latefrag/index_store.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <exception>
#include <json.hpp>
#include <sstream>

#include "byte_io.hpp"
#include "latefrag/error.hpp"
#include "parallel.hpp"

namespace latefrag {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const std::uint8_t* p = bytes.data();
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1U << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

// ---------------------------------------------------------------------------
// Manifest

std::uint64_t IndexManifest::predicted_tier1_bytes() const noexcept {
  std::uint64_t total = 0;
  for (auto c : per_doc_pooled_counts) total += c;
  return total * packed_bytes(dim);
}

std::string IndexManifest::to_json() const {
  json files_json = json::object();
  for (const auto& [name, digest] : files) {
    files_json[name] = {{"bytes", digest.bytes}, {"crc32", digest.crc32}};
  }
  json j = {{"format_version", format_version},
            {"dim", dim},
            {"k", k},
            {"max_vectors", max_vectors},
            {"doc_count", doc_count},
            {"normalized", normalized},
            {"per_doc_pooled_counts", per_doc_pooled_counts},
            {"files", files_json}};
  return j.dump(2) + "\n";
}

IndexManifest IndexManifest::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptManifest, e.what());
  }
  IndexManifest m;
  try {
    // Version first so newer layouts are reported as such, not as corrupt.
    m.format_version = j.at("format_version").get<std::uint32_t>();
    if (m.format_version > kIndexFormatVersion || m.format_version == 0) {
      throw Error(ErrorCode::VersionUnsupported,
                  "format_version " + std::to_string(m.format_version));
    }
    m.dim = j.at("dim").get<std::size_t>();
    m.k = j.at("k").get<std::size_t>();
    m.max_vectors = j.at("max_vectors").get<std::size_t>();
    m.doc_count = j.at("doc_count").get<std::size_t>();
    m.normalized = j.at("normalized").get<bool>();
    m.per_doc_pooled_counts = j.at("per_doc_pooled_counts").get<std::vector<std::uint32_t>>();
    for (const auto& [name, digest] : j.at("files").items()) {
      m.files[name] = FileDigest{digest.at("bytes").get<std::uint64_t>(),
                                 digest.at("crc32").get<std::uint32_t>()};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptManifest, e.what());
  }
  if (m.dim == 0 || m.k == 0) throw Error(ErrorCode::CorruptManifest, "dim and k must be positive");
  return m;
}

// ---------------------------------------------------------------------------
// Index

namespace {

void check_id(const IndexManifest& m, DocId id) {
  if (to_index(id) >= m.doc_count) {
    throw Error(ErrorCode::InvalidArgument, "doc id " + std::to_string(to_index(id)) +
                                                " out of range");
  }
}

class MappedFile {
 public:
  explicit MappedFile(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::IoFailure, "cannot stat " + path.string());
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ > 0) {
      void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd_, 0);
      if (p == MAP_FAILED) {
        ::close(fd_);
        throw Error(ErrorCode::IoFailure, "cannot map " + path.string());
      }
      data_ = static_cast<const std::uint8_t*>(p);
    }
  }
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;
  ~MappedFile() {
    if (data_ != nullptr) ::munmap(const_cast<std::uint8_t*>(data_), size_);
    if (fd_ >= 0) ::close(fd_);
  }

  std::span<const std::uint8_t> bytes() const noexcept { return {data_, size_}; }

 private:
  int fd_ = -1;
  const std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace

BitMatrixView Index::pooled(DocId id) const {
  check_id(manifest_, id);
  const auto i = to_index(id);
  const std::size_t stride = packed_bytes(manifest_.dim);
  const std::uint64_t begin = tier1_offsets_[i];
  const std::size_t count = manifest_.per_doc_pooled_counts[i];
  return {std::span<const std::uint8_t>(tier1_).subspan(begin, count * stride), manifest_.dim,
          count};
}

BitMatrixView Index::full(DocId id) const {
  check_id(manifest_, id);
  const auto i = to_index(id);
  const std::uint64_t begin = offsets_[i];
  const std::uint64_t end = offsets_[i + 1];
  const auto rows = detail::get_le<std::uint32_t>(tier2_.data() + begin);
  return {tier2_.subspan(begin + 4, end - begin - 4), manifest_.dim, rows};
}

PooledDoc Index::pooled_doc(DocId id) const {
  const auto view = pooled(id);
  return PooledDoc{id, manifest_.k,
                   BitMatrix(view.dim, {view.bytes.begin(), view.bytes.end()})};
}

FullDoc Index::full_doc(DocId id) const {
  const auto view = full(id);
  return FullDoc{id, BitMatrix(view.dim, {view.bytes.begin(), view.bytes.end()})};
}

const std::string& Index::fragment_id(DocId id) const {
  check_id(manifest_, id);
  return docmap_[to_index(id)];
}

std::optional<DocId> Index::find(const std::string& fragment_id) const {
  if (!by_fragment_) return std::nullopt;
  auto it = by_fragment_->find(fragment_id);
  if (it == by_fragment_->end()) return std::nullopt;
  return it->second;
}

void Index::finalize_lookup() {
  const std::size_t stride = packed_bytes(manifest_.dim);
  tier1_offsets_.assign(manifest_.doc_count, 0);
  std::uint64_t at = 0;
  for (std::size_t i = 0; i < manifest_.doc_count; ++i) {
    tier1_offsets_[i] = at;
    at += static_cast<std::uint64_t>(manifest_.per_doc_pooled_counts[i]) * stride;
  }
  auto lookup = std::make_shared<std::unordered_map<std::string, DocId>>();
  lookup->reserve(docmap_.size());
  for (std::size_t i = 0; i < docmap_.size(); ++i) lookup->emplace(docmap_[i], DocId{i});
  by_fragment_ = std::move(lookup);
}

// ---------------------------------------------------------------------------
// Building

IndexBuilder::IndexBuilder(BuildOptions options) : options_(options) {
  if (options_.dim == 0) throw Error(ErrorCode::InvalidArgument, "dim must be positive");
  if (options_.k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (options_.max_vectors == 0) {
    throw Error(ErrorCode::InvalidArgument, "max_vectors must be positive");
  }
  if (options_.batch_size == 0) options_.batch_size = 1;
}

void IndexBuilder::add(std::string fragment_id, SegmentedSequence doc) {
  if (fragment_id.empty() || fragment_id.find_first_of("\t\n\r") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument,
                "fragment id '" + fragment_id + "' is empty or contains tab/newline");
  }
  if (doc.matrix.dim() != options_.dim) {
    throw Error(ErrorCode::DimMismatch, "doc '" + fragment_id + "' has dim " +
                                            std::to_string(doc.matrix.dim()) + ", index dim " +
                                            std::to_string(options_.dim));
  }
  validate_sequence(doc);
  if (!seen_.emplace(fragment_id, ids_.size()).second) {
    throw Error(ErrorCode::InvalidArgument, "duplicate fragment id '" + fragment_id + "'");
  }
  ids_.push_back(std::move(fragment_id));
  pending_.push_back(std::move(doc));
  if (pending_.size() >= options_.batch_size) flush();
}

void IndexBuilder::flush() {
  struct Encoded {
    BitMatrix pooled;
    BitMatrix full;
    std::exception_ptr error;
  };
  std::vector<Encoded> out(pending_.size());
  detail::parallel_for(pending_.size(), options_.threads, [&](std::size_t i) {
    try {
      SegmentedSequence doc = std::move(pending_[i]);
      if (options_.normalize) doc.matrix = doc.matrix.normalized();
      out[i].pooled = pool_document(doc, options_.k).vectors;
      out[i].full = full_document(doc, options_.max_vectors).vectors;
    } catch (...) {
      out[i].error = std::current_exception();
    }
  });
  const std::size_t first = ids_.size() - pending_.size();
  pending_.clear();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].error) {
      try {
        std::rethrow_exception(out[i].error);
      } catch (const Error& e) {
        throw Error(e.code(), "doc '" + ids_[first + i] + "': " + e.what());
      }
    }
    const auto pooled = out[i].pooled.bytes();
    tier1_.insert(tier1_.end(), pooled.begin(), pooled.end());
    pooled_counts_.push_back(static_cast<std::uint32_t>(out[i].pooled.count()));
    detail::put_le(tier2_, static_cast<std::uint32_t>(out[i].full.count()));
    const auto full = out[i].full.bytes();
    tier2_.insert(tier2_.end(), full.begin(), full.end());
    offsets_.push_back(tier2_.size());
  }
}

Index IndexBuilder::finish() {
  flush();
  if (ids_.empty()) throw Error(ErrorCode::EmptyCorpus, "no documents added");
  Index index;
  index.manifest_.dim = options_.dim;
  index.manifest_.k = options_.k;
  index.manifest_.max_vectors = options_.max_vectors;
  index.manifest_.doc_count = ids_.size();
  index.manifest_.normalized = options_.normalize;
  index.manifest_.per_doc_pooled_counts = std::move(pooled_counts_);
  index.tier1_ = std::move(tier1_);
  auto owned = std::make_shared<const std::vector<std::uint8_t>>(std::move(tier2_));
  index.tier2_ = std::span<const std::uint8_t>(*owned);
  index.tier2_owner_ = owned;
  index.offsets_ = std::move(offsets_);
  index.docmap_ = std::move(ids_);
  index.finalize_lookup();
  *this = IndexBuilder(options_);
  return index;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

std::vector<std::uint8_t> encode_offsets(std::span<const std::uint64_t> offsets) {
  std::vector<std::uint8_t> out;
  out.reserve(offsets.size() * 8);
  for (auto o : offsets) detail::put_le(out, o);
  return out;
}

std::string encode_docmap(const Index& index) {
  std::string out;
  for (std::size_t i = 0; i < index.size(); ++i) {
    out += index.fragment_id(DocId{i});
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

FileDigest digest(std::span<const std::uint8_t> bytes) {
  return FileDigest{bytes.size(), crc32_of(bytes)};
}

void verify(const IndexManifest& m, const std::string& name, std::span<const std::uint8_t> bytes) {
  auto it = m.files.find(name);
  if (it == m.files.end()) throw Error(ErrorCode::CorruptManifest, "no digest for " + name);
  if (it->second.bytes != bytes.size()) {
    throw Error(ErrorCode::ChecksumMismatch, name + ": expected " +
                                                 std::to_string(it->second.bytes) + " bytes, found " +
                                                 std::to_string(bytes.size()));
  }
  if (it->second.crc32 != crc32_of(bytes)) {
    throw Error(ErrorCode::ChecksumMismatch, name + ": crc32 mismatch");
  }
}

}  // namespace

void write_index(const Index& index, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  const auto offsets = encode_offsets(index.tier2_offsets());
  const auto docmap = encode_docmap(index);

  IndexManifest manifest = index.manifest();
  manifest.files.clear();
  manifest.files[kTier1File] = digest(index.tier1_bytes());
  manifest.files[kTier2File] = digest(index.tier2_bytes());
  manifest.files[kOffsetsFile] = digest(offsets);
  manifest.files[kDocmapFile] = digest(as_bytes(docmap));

  detail::write_file(dir / kTier1File, index.tier1_bytes());
  detail::write_file(dir / kTier2File, index.tier2_bytes());
  detail::write_file(dir / kOffsetsFile, offsets);
  detail::write_file(dir / kDocmapFile, docmap);
  // Manifest last: a directory without one is never mistaken for an index.
  detail::write_file(dir / kManifestFile, manifest.to_json());
}

Index build_index(const std::vector<std::pair<std::string, SegmentedSequence>>& docs,
                  const BuildOptions& options, const fs::path& dir) {
  IndexBuilder builder(options);
  for (const auto& [id, seq] : docs) builder.add(id, seq);
  Index index = builder.finish();
  write_index(index, dir);
  return open_index(dir);
}

Index open_index(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestFile;
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::IoFailure, "no manifest at " + manifest_path.string());
  }
  const auto manifest_bytes = detail::read_file(manifest_path);
  Index index;
  index.manifest_ = IndexManifest::from_json(
      std::string(manifest_bytes.begin(), manifest_bytes.end()));
  const IndexManifest& m = index.manifest_;

  index.tier1_ = detail::read_file(dir / kTier1File);
  verify(m, kTier1File, index.tier1_);
  auto mapped = std::make_shared<const MappedFile>(dir / kTier2File);
  index.tier2_ = mapped->bytes();
  index.tier2_owner_ = mapped;
  verify(m, kTier2File, index.tier2_);
  const auto offset_bytes = detail::read_file(dir / kOffsetsFile);
  verify(m, kOffsetsFile, offset_bytes);
  const auto docmap_bytes = detail::read_file(dir / kDocmapFile);
  verify(m, kDocmapFile, docmap_bytes);

  // Checksums passed; remaining inconsistencies mean the manifest lies.
  if (m.doc_count == 0) throw Error(ErrorCode::CorruptManifest, "doc_count is zero");
  if (m.per_doc_pooled_counts.size() != m.doc_count) {
    throw Error(ErrorCode::CorruptManifest, "per_doc_pooled_counts length != doc_count");
  }
  if (m.predicted_tier1_bytes() != index.tier1_.size()) {
    throw Error(ErrorCode::CorruptManifest, "tier1 size disagrees with pooled counts");
  }
  if (offset_bytes.size() != (m.doc_count + 1) * 8) {
    throw Error(ErrorCode::CorruptManifest, "offsets table length != doc_count + 1");
  }
  index.offsets_.resize(m.doc_count + 1);
  for (std::size_t i = 0; i <= m.doc_count; ++i) {
    index.offsets_[i] = detail::get_le<std::uint64_t>(offset_bytes.data() + 8 * i);
  }
  const std::size_t stride = packed_bytes(m.dim);
  if (index.offsets_.front() != 0 || index.offsets_.back() != index.tier2_.size()) {
    throw Error(ErrorCode::CorruptManifest, "tier2 offsets do not span tier2.bin");
  }
  for (std::size_t i = 0; i < m.doc_count; ++i) {
    const auto begin = index.offsets_[i];
    const auto end = index.offsets_[i + 1];
    if (end <= begin + 4) throw Error(ErrorCode::CorruptManifest, "offsets not increasing");
    const auto rows = detail::get_le<std::uint32_t>(index.tier2_.data() + begin);
    if (rows == 0 || end - begin - 4 != static_cast<std::uint64_t>(rows) * stride) {
      throw Error(ErrorCode::CorruptManifest, "tier2 record " + std::to_string(i) + " malformed");
    }
  }

  std::istringstream lines(std::string(docmap_bytes.begin(), docmap_bytes.end()));
  std::string line;
  while (std::getline(lines, line)) {
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos ||
        line.substr(tab + 1) != std::to_string(index.docmap_.size())) {
      throw Error(ErrorCode::CorruptManifest, "docmap line " +
                                                  std::to_string(index.docmap_.size() + 1));
    }
    index.docmap_.push_back(line.substr(0, tab));
  }
  if (index.docmap_.size() != m.doc_count) {
    throw Error(ErrorCode::CorruptManifest, "docmap has " + std::to_string(index.docmap_.size()) +
                                                " entries, expected " + std::to_string(m.doc_count));
  }
  index.finalize_lookup();
  return index;
}

}  // namespace latefrag

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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace latefrag {

inline constexpr std::size_t kDefaultDim = 128;

/// Dense id assigned to a document at index build time, in [0, N).
enum class DocId : std::uint64_t {};

constexpr std::uint64_t to_index(DocId id) noexcept {
  return static_cast<std::uint64_t>(id);
}

/// Row-major n x d matrix of token embeddings. Entries are always finite.
class TokenMatrix {
 public:
  TokenMatrix() = default;
  explicit TokenMatrix(std::size_t dim) : dim_(dim) {}

  /// Takes ownership of `values` (rows * dim floats). Throws
  /// Error(LengthMismatch) if the size is not a multiple of dim and
  /// Error(NonFiniteInput) on NaN/inf entries.
  TokenMatrix(std::size_t dim, std::vector<float> values);

  static TokenMatrix from_rows(const std::vector<std::vector<float>>& rows);

  std::size_t rows() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const float> values() const noexcept { return values_; }

  /// True when every row was L2-normalized by `normalized()`.
  bool is_normalized() const noexcept { return normalized_; }

  /// Copy with each row scaled to unit L2 norm. Zero rows are rejected
  /// with Error(ZeroRow).
  TokenMatrix normalized() const;

  /// Rows [begin, begin + count).
  TokenMatrix slice(std::size_t begin, std::size_t count) const;

  void append_row(std::span<const float> row);
  void append(const TokenMatrix& other);

  friend bool operator==(const TokenMatrix& a, const TokenMatrix& b) {
    return a.dim_ == b.dim_ && a.values_ == b.values_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<float> values_;
  bool normalized_ = false;
};

/// Functional role of a token within an embedded input. The numeric
/// values are the wire codes used in embedding files.
enum class SegmentLabel : std::uint8_t {
  ImagePrefix = 0,
  ImageContent = 1,
  InstructionText = 2,
  ImageSuffix = 3,
  QueryPrefix = 4,
  QueryContent = 5,
  QuerySuffix = 6,
  DocPrefix = 7,
  DocContent = 8,
  DocSuffix = 9,
};

inline constexpr std::uint8_t kSegmentLabelCount = 10;

std::string_view to_string(SegmentLabel label) noexcept;
std::optional<SegmentLabel> segment_label_from_code(std::uint8_t code) noexcept;
bool is_query_label(SegmentLabel label) noexcept;

struct SegmentedSequence {
  TokenMatrix matrix;
  std::vector<SegmentLabel> labels;
};

struct SegmentRun {
  SegmentLabel label;
  std::size_t begin;
  std::size_t count;
};

/// Checks that there is one label per row and that labels form contiguous
/// runs in one of the recognized layouts:
///   image input:      ImagePrefix ImageContent InstructionText ImageSuffix
///   text query:       QueryPrefix QueryContent QuerySuffix
///   multimodal query: ImagePrefix ImageContent QueryPrefix QueryContent
///                     QuerySuffix ImageSuffix
///   document:         DocPrefix DocContent DocSuffix
/// Runs may be absent. Throws Error(LengthMismatch) or
/// Error(LabelOrderViolation).
void validate_sequence(const SegmentedSequence& seq);

/// Maximal runs of equal labels, in order.
std::vector<SegmentRun> segment_runs(std::span<const SegmentLabel> labels);

/// All rows carrying `label`, in order.
TokenMatrix extract_segment(const SegmentedSequence& seq, SegmentLabel label);

std::size_t count_label(const SegmentedSequence& seq, SegmentLabel label);

struct Hyperlink {
  std::string surface_text;
  std::string target_title;

  friend bool operator==(const Hyperlink&, const Hyperlink&) = default;
};

struct FragmentImage {
  std::string image_ref;
  std::string caption;

  friend bool operator==(const FragmentImage&, const FragmentImage&) = default;
};

/// A paragraph plus every image that precedes it on its source page.
struct Fragment {
  std::string fragment_id;
  std::string page_title;
  std::size_t paragraph_index = 0;
  std::string paragraph_text;
  std::vector<Hyperlink> hyperlinks;
  std::vector<FragmentImage> images;

  bool has_images() const noexcept { return !images.empty(); }

  friend bool operator==(const Fragment&, const Fragment&) = default;
};

/// Throws Error(InvalidArgument) on empty paragraph text or duplicate
/// image refs.
void validate_fragment(const Fragment& fragment);

}  // namespace latefrag

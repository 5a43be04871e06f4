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

#include "latefrag/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "latefrag/error.hpp"

namespace latefrag {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::LabelOrderViolation: return "LabelOrderViolation";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingSegment: return "MissingSegment";
    case ErrorCode::NoQueryTokens: return "NoQueryTokens";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::CorruptManifest: return "CorruptManifest";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::NoParagraphs: return "NoParagraphs";
    case ErrorCode::UnknownRoot: return "UnknownRoot";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::InvalidK: return "InvalidK";
  }
  return "Unknown";
}

TokenMatrix::TokenMatrix(std::size_t dim, std::vector<float> values)
    : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) {
    if (!values_.empty()) throw Error(ErrorCode::LengthMismatch, "dim 0 with non-empty values");
    return;
  }
  if (values_.size() % dim_ != 0) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(values_.size()) + " values is not a multiple of dim " +
                    std::to_string(dim_));
  }
  for (float v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "token matrix entry");
  }
}

TokenMatrix TokenMatrix::from_rows(const std::vector<std::vector<float>>& rows) {
  if (rows.empty()) return TokenMatrix{};
  const std::size_t dim = rows.front().size();
  std::vector<float> values;
  values.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw Error(ErrorCode::LengthMismatch, "ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return TokenMatrix(dim, std::move(values));
}

TokenMatrix TokenMatrix::normalized() const {
  TokenMatrix out = *this;
  for (std::size_t i = 0; i < rows(); ++i) {
    double sq = 0.0;
    for (float v : row(i)) sq += static_cast<double>(v) * v;
    if (sq == 0.0) {
      throw Error(ErrorCode::ZeroRow, "row " + std::to_string(i) + " has zero norm");
    }
    const double inv = 1.0 / std::sqrt(sq);
    float* p = out.values_.data() + i * dim_;
    for (std::size_t j = 0; j < dim_; ++j) p[j] = static_cast<float>(p[j] * inv);
  }
  out.normalized_ = true;
  return out;
}

TokenMatrix TokenMatrix::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > rows()) throw Error(ErrorCode::InvalidArgument, "slice out of range");
  TokenMatrix out(dim_);
  out.values_.assign(values_.begin() + static_cast<std::ptrdiff_t>(begin * dim_),
                     values_.begin() + static_cast<std::ptrdiff_t>((begin + count) * dim_));
  out.normalized_ = normalized_;
  return out;
}

void TokenMatrix::append_row(std::span<const float> r) {
  if (r.size() != dim_) throw Error(ErrorCode::DimMismatch, "append_row");
  for (float v : r) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "append_row");
  }
  values_.insert(values_.end(), r.begin(), r.end());
  normalized_ = false;
}

void TokenMatrix::append(const TokenMatrix& other) {
  if (other.empty()) return;
  if (empty() && dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) throw Error(ErrorCode::DimMismatch, "append");
  const bool both = (empty() || normalized_) && other.normalized_;
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  normalized_ = both;
}

std::string_view to_string(SegmentLabel label) noexcept {
  switch (label) {
    case SegmentLabel::ImagePrefix: return "ImagePrefix";
    case SegmentLabel::ImageContent: return "ImageContent";
    case SegmentLabel::InstructionText: return "InstructionText";
    case SegmentLabel::ImageSuffix: return "ImageSuffix";
    case SegmentLabel::QueryPrefix: return "QueryPrefix";
    case SegmentLabel::QueryContent: return "QueryContent";
    case SegmentLabel::QuerySuffix: return "QuerySuffix";
    case SegmentLabel::DocPrefix: return "DocPrefix";
    case SegmentLabel::DocContent: return "DocContent";
    case SegmentLabel::DocSuffix: return "DocSuffix";
  }
  return "Unknown";
}

std::optional<SegmentLabel> segment_label_from_code(std::uint8_t code) noexcept {
  if (code >= kSegmentLabelCount) return std::nullopt;
  return static_cast<SegmentLabel>(code);
}

bool is_query_label(SegmentLabel label) noexcept {
  return label == SegmentLabel::QueryPrefix || label == SegmentLabel::QueryContent ||
         label == SegmentLabel::QuerySuffix;
}

std::vector<SegmentRun> segment_runs(std::span<const SegmentLabel> labels) {
  std::vector<SegmentRun> runs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (runs.empty() || runs.back().label != labels[i]) {
      runs.push_back({labels[i], i, 1});
    } else {
      ++runs.back().count;
    }
  }
  return runs;
}

namespace {

using L = SegmentLabel;

constexpr std::array<L, 4> kImageLayout{L::ImagePrefix, L::ImageContent, L::InstructionText,
                                        L::ImageSuffix};
constexpr std::array<L, 3> kQueryLayout{L::QueryPrefix, L::QueryContent, L::QuerySuffix};
constexpr std::array<L, 6> kMultimodalLayout{L::ImagePrefix,  L::ImageContent, L::QueryPrefix,
                                             L::QueryContent, L::QuerySuffix,  L::ImageSuffix};
constexpr std::array<L, 3> kDocLayout{L::DocPrefix, L::DocContent, L::DocSuffix};

// True when `runs` visits labels in an order that is a subsequence of `layout`.
template <std::size_t N>
bool follows(const std::vector<SegmentRun>& runs, const std::array<L, N>& layout) {
  std::size_t pos = 0;
  for (const auto& run : runs) {
    while (pos < N && layout[pos] != run.label) ++pos;
    if (pos == N) return false;
    ++pos;
  }
  return true;
}

}  // namespace

void validate_sequence(const SegmentedSequence& seq) {
  if (seq.labels.size() != seq.matrix.rows()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(seq.labels.size()) + " labels for " +
                                               std::to_string(seq.matrix.rows()) + " rows");
  }
  const auto runs = segment_runs(seq.labels);
  if (follows(runs, kImageLayout) || follows(runs, kQueryLayout) ||
      follows(runs, kMultimodalLayout) || follows(runs, kDocLayout)) {
    return;
  }
  std::string order;
  for (const auto& run : runs) {
    if (!order.empty()) order += ",";
    order += to_string(run.label);
  }
  throw Error(ErrorCode::LabelOrderViolation, "run order [" + order + "]");
}

TokenMatrix extract_segment(const SegmentedSequence& seq, SegmentLabel label) {
  TokenMatrix out(seq.matrix.dim());
  for (std::size_t i = 0; i < seq.labels.size(); ++i) {
    if (seq.labels[i] == label) out.append_row(seq.matrix.row(i));
  }
  return out;
}

std::size_t count_label(const SegmentedSequence& seq, SegmentLabel label) {
  return static_cast<std::size_t>(std::count(seq.labels.begin(), seq.labels.end(), label));
}

void validate_fragment(const Fragment& fragment) {
  if (fragment.paragraph_text.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "fragment '" + fragment.fragment_id + "' has empty paragraph_text");
  }
  std::set<std::string_view> refs;
  for (const auto& image : fragment.images) {
    if (!refs.insert(image.image_ref).second) {
      throw Error(ErrorCode::InvalidArgument, "fragment '" + fragment.fragment_id +
                                                  "' repeats image_ref '" + image.image_ref + "'");
    }
  }
}

}  // namespace latefrag

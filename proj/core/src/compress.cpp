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

#include "latefrag/compress.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "latefrag/error.hpp"

namespace latefrag {

BitVector binarize(std::span<const float> v) {
  BitVector bits(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j])) {
      throw Error(ErrorCode::NonFiniteInput, "binarize: coordinate " + std::to_string(j));
    }
    bits.set(j, v[j] >= 0.0F);
  }
  return bits;
}

BitMatrix binarize_rows(const TokenMatrix& m) {
  BitMatrix out(m.dim());
  for (std::size_t i = 0; i < m.rows(); ++i) out.append(binarize(m.row(i)));
  return out;
}

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    dot += static_cast<double>(a[t]) * b[t];
    na += static_cast<double>(a[t]) * a[t];
    nb += static_cast<double>(b[t]) * b[t];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Greedy agglomeration with a cached nearest partner per cluster. For an
// active cluster a, nn[a] is the best active b > a under (distance, b).
// The globally closest pair under (distance, a, b) is then the minimum of
// (nn_dist[a], a) over active a, which matches a full pairwise scan.
class Agglomerator {
 public:
  explicit Agglomerator(const TokenMatrix& m)
      : n_(m.rows()), dist_(n_ * n_, 0.0), size_(n_, 1), active_(n_, true), parent_(n_),
        nn_(n_, 0), nn_dist_(n_, kInf) {
    std::vector<double> unit(n_ * m.dim());
    for (std::size_t i = 0; i < n_; ++i) {
      const auto r = m.row(i);
      double sq = 0.0;
      for (float v : r) sq += static_cast<double>(v) * v;
      const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
      for (std::size_t t = 0; t < m.dim(); ++t) unit[i * m.dim() + t] = r[t] * inv;
      parent_[i] = i;
    }
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) {
        double dot = 0.0;
        for (std::size_t t = 0; t < m.dim(); ++t) dot += unit[i * m.dim() + t] * unit[j * m.dim() + t];
        at(i, j) = at(j, i) = 1.0 - dot;
      }
    }
    for (std::size_t i = 0; i < n_; ++i) refresh(i);
  }

  void run(std::size_t target) {
    for (std::size_t remaining = n_; remaining > target; --remaining) {
      std::size_t a = n_;
      for (std::size_t i = 0; i < n_; ++i) {
        if (active_[i] && (a == n_ || nn_dist_[i] < nn_dist_[a])) a = i;
      }
      merge(a, nn_[a]);
    }
  }

  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> root(n_);
    std::map<std::size_t, std::size_t> dense;
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t r = i;
      while (parent_[r] != r) r = parent_[r];
      root[i] = r;
      dense.emplace(r, 0);
    }
    std::size_t next = 0;
    for (auto& [r, id] : dense) id = next++;
    for (auto& r : root) r = dense.at(r);
    return root;
  }

 private:
  double& at(std::size_t i, std::size_t j) { return dist_[i * n_ + j]; }

  void refresh(std::size_t a) {
    nn_dist_[a] = kInf;
    nn_[a] = a;
    for (std::size_t b = a + 1; b < n_; ++b) {
      if (active_[b] && at(a, b) < nn_dist_[a]) {
        nn_dist_[a] = at(a, b);
        nn_[a] = b;
      }
    }
  }

  // a < b; the merged cluster keeps the name a.
  void merge(std::size_t a, std::size_t b) {
    const double wa = static_cast<double>(size_[a]);
    const double wb = static_cast<double>(size_[b]);
    for (std::size_t k = 0; k < n_; ++k) {
      if (!active_[k] || k == a || k == b) continue;
      at(a, k) = at(k, a) = (wa * at(a, k) + wb * at(b, k)) / (wa + wb);
    }
    size_[a] += size_[b];
    active_[b] = false;
    parent_[b] = a;

    refresh(a);
    for (std::size_t k = 0; k < b; ++k) {
      if (!active_[k] || k == a) continue;
      if (nn_[k] == a || nn_[k] == b) {
        refresh(k);
      } else if (k < a && (at(k, a) < nn_dist_[k] || (at(k, a) == nn_dist_[k] && a < nn_[k]))) {
        nn_dist_[k] = at(k, a);
        nn_[k] = a;
      }
    }
  }

  std::size_t n_;
  std::vector<double> dist_;
  std::vector<std::size_t> size_;
  std::vector<bool> active_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> nn_;
  std::vector<double> nn_dist_;
};

struct DocSegments {
  TokenMatrix special;
  TokenMatrix content;
};

DocSegments split_document(const SegmentedSequence& doc) {
  validate_sequence(doc);
  DocSegments parts{TokenMatrix(doc.matrix.dim()), TokenMatrix(doc.matrix.dim())};
  for (std::size_t i = 0; i < doc.labels.size(); ++i) {
    switch (doc.labels[i]) {
      case SegmentLabel::DocPrefix:
      case SegmentLabel::DocSuffix: parts.special.append_row(doc.matrix.row(i)); break;
      case SegmentLabel::DocContent: parts.content.append_row(doc.matrix.row(i)); break;
      default:
        throw Error(ErrorCode::LabelOrderViolation,
                    "document row labeled " + std::string(to_string(doc.labels[i])));
    }
  }
  if (parts.content.rows() == 0) throw Error(ErrorCode::MissingSegment, "no DocContent rows");
  if (parts.special.rows() == 0) {
    throw Error(ErrorCode::MissingSegment, "no DocPrefix/DocSuffix rows");
  }
  return parts;
}

void add_mean(const TokenMatrix& m, std::span<const std::size_t> rows, TokenMatrix& out) {
  std::vector<double> acc(m.dim(), 0.0);
  for (std::size_t r : rows) {
    const auto v = m.row(r);
    for (std::size_t t = 0; t < m.dim(); ++t) acc[t] += v[t];
  }
  std::vector<float> mean(m.dim());
  for (std::size_t t = 0; t < m.dim(); ++t) {
    mean[t] = static_cast<float>(acc[t] / static_cast<double>(rows.size()));
  }
  out.append_row(mean);
}

}  // namespace

std::vector<std::size_t> cluster_content(const TokenMatrix& vectors, std::size_t k) {
  if (vectors.rows() == 0) throw Error(ErrorCode::EmptyInput, "no rows to cluster");
  if (k == 0) throw Error(ErrorCode::EmptyInput, "cluster count must be positive");
  Agglomerator agg(vectors);
  agg.run(std::min(k, vectors.rows()));
  return agg.labels();
}

TokenMatrix pool_centroids(const SegmentedSequence& doc, std::size_t k) {
  const auto parts = split_document(doc);
  TokenMatrix out(doc.matrix.dim());

  std::vector<std::size_t> all(parts.special.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  add_mean(parts.special, all, out);

  const auto labels = cluster_content(parts.content, k);
  std::size_t clusters = 0;
  for (auto l : labels) clusters = std::max(clusters, l + 1);
  std::vector<std::vector<std::size_t>> members(clusters);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (const auto& group : members) add_mean(parts.content, group, out);
  return out;
}

PooledDoc pool_document(const SegmentedSequence& doc, std::size_t k, DocId id) {
  return PooledDoc{id, k, binarize_rows(pool_centroids(doc, k))};
}

FullDoc full_document(const SegmentedSequence& doc, std::size_t max_vectors, DocId id) {
  validate_sequence(doc);
  const std::size_t n = doc.matrix.rows();
  if (n == 0) throw Error(ErrorCode::EmptyDocument, "document has no rows");
  if (max_vectors == 0) throw Error(ErrorCode::InvalidArgument, "max_vectors must be positive");
  const std::size_t content = count_label(doc, SegmentLabel::DocContent);
  std::size_t drop = n > max_vectors ? n - max_vectors : 0;
  if (drop > content) {
    throw Error(ErrorCode::InvalidArgument,
                "max_vectors " + std::to_string(max_vectors) + " is below the special-token count");
  }
  const std::size_t keep_content = content - drop;

  FullDoc full{id, BitMatrix(doc.matrix.dim())};
  std::size_t seen_content = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (doc.labels[i] == SegmentLabel::DocContent && seen_content++ >= keep_content) continue;
    full.vectors.append(binarize(doc.matrix.row(i)));
  }
  return full;
}

}  // namespace latefrag

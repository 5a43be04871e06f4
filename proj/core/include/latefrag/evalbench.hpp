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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latefrag/index_store.hpp"
#include "latefrag/licn.hpp"
#include "latefrag/search.hpp"
#include "latefrag/types.hpp"

namespace latefrag {

/// query_id -> the single relevant fragment_id.
using Qrels = std::map<std::string, std::string>;

/// TSV "query_id<TAB>fragment_id" per line. Throws Error(ParseError) naming
/// the line for malformed or duplicate entries.
Qrels read_qrels_tsv(const std::filesystem::path& path);
void write_qrels_tsv(const Qrels& qrels, const std::filesystem::path& path);

/// 1-based rank of `fragment_id` in the hits, if present.
std::optional<std::size_t> rank_of(const SearchResult& result, const std::string& fragment_id);

/// Binary-gain NDCG with one relevant item: 1 / log2(rank + 1) when the
/// rank is within k, else 0. Throws Error(InvalidK) for k == 0.
double ndcg_at_k(std::optional<std::size_t> rank, std::size_t k);
double ndcg_at_k(const SearchResult& result, const std::string& relevant, std::size_t k);

/// 1 if the relevant item is within the top k, else 0.
double recall_at_k(std::optional<std::size_t> rank, std::size_t k);
double recall_at_k(const SearchResult& result, const std::string& relevant, std::size_t k);

// Classification metrics over predictions.

/// Fraction of rows whose true class is among the k best scores (ties by
/// lower index, matching predict_multiclass).
double top_k_accuracy(const licn::Matrix& scores, std::span<const std::size_t> truth, std::size_t k);
/// Unweighted mean of per-class F1 over classes that occur in truth or
/// predictions.
double macro_f1(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);
/// F1 over pooled (image, label) decisions.
double micro_f1(const std::vector<std::vector<std::size_t>>& predicted,
                const std::vector<std::vector<std::size_t>>& truth);

enum class StoreKind { FullOneStage, PooledTwoStage };
enum class QueryKind { Full, Filtered };

struct BenchConfig {
  StoreKind store = StoreKind::PooledTwoStage;
  QueryKind query = QueryKind::Filtered;
  SearchParams params{};

  /// e.g. "full-one-stage/filtered"
  std::string name() const;
};

/// The four store x query combinations.
std::vector<BenchConfig> all_bench_configs(const SearchParams& params = {});
/// Parses "all" or a comma-separated list of config names.
std::vector<BenchConfig> parse_bench_configs(const std::string& spec, const SearchParams& params = {});

struct BenchQuery {
  std::string query_id;
  SegmentedSequence embedded;  // the jointly embedded query with labels
};

struct ConfigReport {
  BenchConfig config;
  std::vector<std::string> query_ids;
  std::vector<double> ndcg;
  std::vector<double> recall;
  std::vector<double> latency_us;
  std::vector<double> overhead_us;  // total - stage1 - stage2
  std::vector<std::size_t> query_vectors;

  double mean_ndcg = 0.0;
  double mean_recall = 0.0;
  double mean_latency_us = 0.0;
  double median_latency_us = 0.0;
  double mean_query_vectors = 0.0;
};

/// A row of published or externally computed numbers, shown next to the
/// measured rows but never compared against them.
struct ReferenceRow {
  std::string store;
  std::string query;
  double ndcg_at_5;
  double recall_at_1;
  double avg_time_cs;
};

/// Published reference rows for the store/query grid (percentages and
/// centiseconds), including the single-vector baseline row.
const std::vector<ReferenceRow>& published_reference_rows();

struct BenchReport {
  std::size_t ndcg_k = 5;
  std::size_t recall_k = 1;
  std::size_t corpus_size = 0;
  std::size_t query_count = 0;
  std::vector<ConfigReport> configs;
  std::vector<ReferenceRow> reference_rows;
  std::vector<ReferenceRow> external_baselines;

  /// Per-config metric arrays and summaries. With `include_latency` false
  /// the output depends only on the corpus, queries and configs.
  std::string to_json(bool include_latency = true) const;
  std::string to_table() const;
};

struct BenchOptions {
  std::size_t ndcg_k = 5;
  std::size_t recall_k = 1;
};

/// Runs every config over every query in `qrels`. Throws
/// Error(MissingEmbedding) when a judged query has no embedding or its
/// relevant fragment is not in the index.
BenchReport run_benchmark(const Index& index, const std::vector<BenchQuery>& queries,
                          const Qrels& qrels, const std::vector<BenchConfig>& configs,
                          const BenchOptions& options = {});

double median(std::vector<double> values);

}  // namespace latefrag

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

#include "latefrag/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "byte_io.hpp"
#include "latefrag/error.hpp"

namespace latefrag {

using json = nlohmann::json;

Qrels read_qrels_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  Qrels qrels;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto tab = text.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == text.size() ||
        text.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line) + ": expected query_id<TAB>fragment_id");
    }
    auto [it, inserted] = qrels.emplace(text.substr(0, tab), text.substr(tab + 1));
    if (!inserted) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line) + ": duplicate query id '" + it->first + "'");
    }
  }
  return qrels;
}

void write_qrels_tsv(const Qrels& qrels, const std::filesystem::path& path) {
  std::string body;
  for (const auto& [q, f] : qrels) body += q + "\t" + f + "\n";
  detail::write_file(path, body);
}

std::optional<std::size_t> rank_of(const SearchResult& result, const std::string& fragment_id) {
  for (std::size_t i = 0; i < result.hits.size(); ++i) {
    if (result.hits[i].fragment_id == fragment_id) return i + 1;
  }
  return std::nullopt;
}

double ndcg_at_k(std::optional<std::size_t> rank, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidK, "k must be >= 1");
  if (!rank || *rank == 0 || *rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(*rank) + 1.0);
}

double ndcg_at_k(const SearchResult& result, const std::string& relevant, std::size_t k) {
  return ndcg_at_k(rank_of(result, relevant), k);
}

double recall_at_k(std::optional<std::size_t> rank, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidK, "k must be >= 1");
  return rank && *rank >= 1 && *rank <= k ? 1.0 : 0.0;
}

double recall_at_k(const SearchResult& result, const std::string& relevant, std::size_t k) {
  return recall_at_k(rank_of(result, relevant), k);
}

double top_k_accuracy(const licn::Matrix& scores, std::span<const std::size_t> truth, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidK, "k must be >= 1");
  if (truth.size() != scores.rows()) throw Error(ErrorCode::LengthMismatch, "truth vs score rows");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const std::size_t t = truth[i];
    if (t >= scores.cols()) throw Error(ErrorCode::InvalidArgument, "true class out of range");
    // Position of t when sorting by (score desc, index asc).
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, t) || (scores(i, j) == scores(i, t) && j < t)) ++ahead;
    }
    hits += ahead < k;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double macro_f1(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "macro_f1");
  std::map<std::size_t, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) {
      ++counts[truth[i]][0];
    } else {
      ++counts[predicted[i]][1];
      ++counts[truth[i]][2];
    }
  }
  if (counts.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [cls, c] : counts) {
    const double denom = 2.0 * c[0] + c[1] + c[2];
    sum += denom == 0.0 ? 0.0 : 2.0 * c[0] / denom;
  }
  return sum / static_cast<double>(counts.size());
}

double micro_f1(const std::vector<std::vector<std::size_t>>& predicted,
                const std::vector<std::vector<std::size_t>>& truth) {
  if (predicted.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "micro_f1");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::set<std::size_t> p(predicted[i].begin(), predicted[i].end());
    const std::set<std::size_t> t(truth[i].begin(), truth[i].end());
    for (auto x : p) (t.contains(x) ? tp : fp)++;
    for (auto x : t) fn += !p.contains(x);
  }
  const double denom = 2.0 * static_cast<double>(tp) + static_cast<double>(fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

std::string BenchConfig::name() const {
  std::string s = store == StoreKind::FullOneStage ? "full-one-stage" : "pooled-two-stage";
  s += query == QueryKind::Full ? "/full" : "/filtered";
  return s;
}

std::vector<BenchConfig> all_bench_configs(const SearchParams& params) {
  return {{StoreKind::FullOneStage, QueryKind::Full, params},
          {StoreKind::FullOneStage, QueryKind::Filtered, params},
          {StoreKind::PooledTwoStage, QueryKind::Full, params},
          {StoreKind::PooledTwoStage, QueryKind::Filtered, params}};
}

std::vector<BenchConfig> parse_bench_configs(const std::string& spec, const SearchParams& params) {
  const auto all = all_bench_configs(params);
  if (spec == "all") return all;
  std::vector<BenchConfig> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto it = std::find_if(all.begin(), all.end(), [&](const BenchConfig& c) { return c.name() == item; });
    if (it == all.end()) throw Error(ErrorCode::InvalidArgument, "unknown config '" + item + "'");
    out.push_back(*it);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no configs selected");
  return out;
}

const std::vector<ReferenceRow>& published_reference_rows() {
  static const std::vector<ReferenceRow> rows = {
      {"clip", "clip", 2.66, 1.49, 0.39},
      {"full-one-stage", "full", 33.92, 26.90, 67.92},
      {"full-one-stage", "filtered", 44.88, 38.41, 32.26},
      {"pooled-two-stage", "full", 21.50, 17.39, 11.14},
      {"pooled-two-stage", "filtered", 27.61, 23.87, 4.66},
  };
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

json reference_json(const std::vector<ReferenceRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"store", r.store}, {"query", r.query}, {"ndcg_at_5", r.ndcg_at_5},
                   {"recall_at_1", r.recall_at_1}, {"avg_time_cs", r.avg_time_cs}});
  }
  return arr;
}

}  // namespace

BenchReport run_benchmark(const Index& index, const std::vector<BenchQuery>& queries,
                          const Qrels& qrels, const std::vector<BenchConfig>& configs,
                          const BenchOptions& options) {
  if (options.ndcg_k == 0 || options.recall_k == 0) throw Error(ErrorCode::InvalidK, "k must be >= 1");
  std::unordered_map<std::string, const BenchQuery*> by_id;
  for (const auto& q : queries) by_id.emplace(q.query_id, &q);

  struct Prepared {
    std::string id;
    std::string relevant;
    QueryEmbedding full;
    QueryEmbedding filtered;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(qrels.size());
  for (const auto& [qid, fragment] : qrels) {
    auto it = by_id.find(qid);
    if (it == by_id.end()) throw Error(ErrorCode::MissingEmbedding, "no embedding for query '" + qid + "'");
    if (!index.find(fragment)) {
      throw Error(ErrorCode::MissingEmbedding, "relevant fragment '" + fragment + "' of query '" + qid +
                                                   "' is not in the index");
    }
    const auto& seq = it->second->embedded;
    prepared.push_back({qid, fragment, full_query_embeddings(seq), filter_query_embeddings(seq)});
  }

  BenchReport report;
  report.ndcg_k = options.ndcg_k;
  report.recall_k = options.recall_k;
  report.corpus_size = index.size();
  report.query_count = prepared.size();
  report.reference_rows = published_reference_rows();

  for (const auto& config : configs) {
    ConfigReport cr;
    cr.config = config;
    for (const auto& q : prepared) {
      const QueryEmbedding& emb = config.query == QueryKind::Full ? q.full : q.filtered;
      const SearchResult result = config.store == StoreKind::FullOneStage
                                      ? search_one_stage(index, emb, config.params.n2)
                                      : search_two_stage(index, emb, config.params);
      const auto rank = rank_of(result, q.relevant);
      cr.query_ids.push_back(q.id);
      cr.ndcg.push_back(ndcg_at_k(rank, options.ndcg_k));
      cr.recall.push_back(recall_at_k(rank, options.recall_k));
      cr.latency_us.push_back(result.timings.total_us);
      cr.overhead_us.push_back(result.timings.total_us - result.timings.stage1_us -
                               result.timings.stage2_us);
      cr.query_vectors.push_back(emb.matrix.rows());
    }
    cr.mean_ndcg = mean(cr.ndcg);
    cr.mean_recall = mean(cr.recall);
    cr.mean_latency_us = mean(cr.latency_us);
    cr.median_latency_us = median(cr.latency_us);
    double vectors = 0.0;
    for (auto n : cr.query_vectors) vectors += static_cast<double>(n);
    cr.mean_query_vectors = cr.query_vectors.empty() ? 0.0 : vectors / static_cast<double>(cr.query_vectors.size());
    report.configs.push_back(std::move(cr));
  }
  return report;
}

std::string BenchReport::to_json(bool include_latency) const {
  json j;
  j["ndcg_k"] = ndcg_k;
  j["recall_k"] = recall_k;
  j["corpus_size"] = corpus_size;
  j["query_count"] = query_count;
  json rows = json::array();
  for (const auto& c : configs) {
    json r = {{"config", c.config.name()},
              {"n1", c.config.params.n1},
              {"n2", c.config.params.n2},
              {"oversample", c.config.params.oversample},
              {"query_ids", c.query_ids},
              {"ndcg", c.ndcg},
              {"recall", c.recall},
              {"query_vectors", c.query_vectors},
              {"mean_ndcg", c.mean_ndcg},
              {"mean_recall", c.mean_recall},
              {"mean_query_vectors", c.mean_query_vectors}};
    if (include_latency) {
      r["latency_us"] = c.latency_us;
      r["overhead_us"] = c.overhead_us;
      r["mean_latency_us"] = c.mean_latency_us;
      r["median_latency_us"] = c.median_latency_us;
      r["mean_latency_cs"] = c.mean_latency_us / 1e4;
      r["median_latency_cs"] = c.median_latency_us / 1e4;
    }
    rows.push_back(std::move(r));
  }
  j["configs"] = rows;
  j["reference_rows"] = reference_json(reference_rows);
  j["external_baselines"] = reference_json(external_baselines);
  return j.dump(2) + "\n";
}

std::string BenchReport::to_table() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-10s %9s %9s %12s %12s %9s\n", "store", "query",
                ("NDCG@" + std::to_string(ndcg_k)).c_str(), ("R@" + std::to_string(recall_k)).c_str(),
                "mean (cs)", "median (cs)", "q-vecs");
  out << line;
  for (const auto& c : configs) {
    const std::string store = c.config.store == StoreKind::FullOneStage ? "full-one-stage" : "pooled-two-stage";
    const std::string query = c.config.query == QueryKind::Full ? "full" : "filtered";
    std::snprintf(line, sizeof line, "%-18s %-10s %9.2f %9.2f %12.4f %12.4f %9.1f\n", store.c_str(),
                  query.c_str(), 100.0 * c.mean_ndcg, 100.0 * c.mean_recall, c.mean_latency_us / 1e4,
                  c.median_latency_us / 1e4, c.mean_query_vectors);
    out << line;
  }
  if (!reference_rows.empty()) {
    out << "reference (not comparable at this scale):\n";
    for (const auto& r : reference_rows) {
      std::snprintf(line, sizeof line, "%-18s %-10s %9.2f %9.2f %12.2f\n", r.store.c_str(), r.query.c_str(),
                    r.ndcg_at_5, r.recall_at_1, r.avg_time_cs);
      out << line;
    }
  }
  return out.str();
}

}  // namespace latefrag

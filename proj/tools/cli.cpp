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

#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <unordered_set>

#include "latefrag/corpus.hpp"
#include "latefrag/embedding_file.hpp"
#include "latefrag/error.hpp"
#include "latefrag/evalbench.hpp"
#include "latefrag/index_store.hpp"
#include "latefrag/search.hpp"
#include "latefrag/synthetic.hpp"

namespace latefrag::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kIndexEnv = "LATEFRAG_INDEX";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot create " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

std::string index_dir_or_env(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kIndexEnv); env && *env) return env;
  throw UsageError("--index is required (or set LATEFRAG_INDEX)");
}

QueryEmbedding prepare_query(const EmbeddingRecord& rec, bool full) {
  return full ? full_query_embeddings(rec.sequence) : filter_query_embeddings(rec.sequence);
}

template <typename F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const Error& ex) {
    throw UsageError(ex.what());
  }
}

void add_search_params(CLI::App* cmd, SearchParams& p) {
  cmd->add_option("--n1", p.n1, "Stage-1 prefetch size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--n2", p.n2, "Results returned")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--oversample", p.oversample, "Stage-1 keeps n1 * oversample")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

// build ------------------------------------------------------------------

struct BuildArgs {
  std::string input, embeddings, out;
  BuildOptions options;
};

void cmd_build(const BuildArgs& a, std::ostream& out) {
  std::unordered_set<std::string> fragment_ids;
  for_each_fragment(a.input, [&](Fragment&& f) { fragment_ids.insert(f.fragment_id); });
  auto records = read_embedding_file(a.embeddings);

  std::unordered_set<std::string> embedded;
  for (const auto& rec : records) {
    if (!fragment_ids.contains(rec.id)) {
      throw Error(ErrorCode::InvalidArgument, "embedding id '" + rec.id + "' has no fragment in " + a.input);
    }
    embedded.insert(rec.id);
  }
  for (const auto& id : fragment_ids) {
    if (!embedded.contains(id)) throw Error(ErrorCode::MissingEmbedding, "fragment '" + id + "' has no embedding");
  }

  IndexBuilder builder(a.options);
  for (auto& rec : records) builder.add(std::move(rec.id), std::move(rec.sequence));
  records.clear();
  Index index = builder.finish();
  write_index(index, a.out);
  out << "docs " << index.size() << "\n"
      << "tier1 bytes " << index.tier1_bytes().size() << "\n"
      << "tier2 bytes " << index.tier2_bytes().size() << "\n"
      << "written to " << a.out << "\n";
}

// search -----------------------------------------------------------------

struct SearchArgs {
  std::string index, query_emb;
  SearchParams params;
  bool one_stage = false;
  bool full_query = false;
  bool json = false;
  bool no_timings = false;
};

void cmd_search(const SearchArgs& a, std::ostream& out) {
  as_usage([&] { a.params.validate(); });
  const Index index = open_index(index_dir_or_env(a.index));
  const auto records = read_embedding_file(a.query_emb);
  if (records.empty()) throw Error(ErrorCode::EmptyQuery, "no queries in " + a.query_emb);
  for (const auto& rec : records) {
    const QueryEmbedding q = prepare_query(rec, a.full_query);
    const SearchResult r = a.one_stage ? search_one_stage(index, q, a.params.n2)
                                       : search_two_stage(index, q, a.params);
    if (a.json) {
      out << to_json(r, !a.no_timings) << "\n";
      continue;
    }
    out << "query " << rec.id << " (" << q.matrix.rows() << " vectors)\n";
    char line[256];
    for (std::size_t i = 0; i < r.hits.size(); ++i) {
      std::snprintf(line, sizeof line, "%4zu  %-32s %.6f\n", i + 1, r.hits[i].fragment_id.c_str(), r.hits[i].score);
      out << line;
    }
    if (!a.no_timings) {
      std::snprintf(line, sizeof line, "  stage1 %.1f us  stage2 %.1f us  total %.1f us\n", r.timings.stage1_us,
                    r.timings.stage2_us, r.timings.total_us);
      out << line;
    }
  }
}

// eval -------------------------------------------------------------------

struct EvalArgs {
  std::string index, queries, qrels, configs = "all", report;
  SearchParams params;
  BenchOptions bench;
  bool no_latency = false;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  as_usage([&] { a.params.validate(); });
  const auto configs = as_usage([&] { return parse_bench_configs(a.configs, a.params); });
  const Qrels qrels = read_qrels_tsv(a.qrels);
  const Index index = open_index(index_dir_or_env(a.index));
  std::vector<BenchQuery> queries;
  for (auto& rec : read_embedding_file(a.queries)) queries.push_back({std::move(rec.id), std::move(rec.sequence)});
  const BenchReport report = run_benchmark(index, queries, qrels, configs, a.bench);
  out << report.to_table();
  if (!a.report.empty()) {
    write_text(a.report, report.to_json(!a.no_latency));
    out << "report written to " << a.report << "\n";
  }
}

// corpus -----------------------------------------------------------------

struct AssembleArgs {
  std::string pages, out;
  std::optional<std::size_t> image_cap;
};

void cmd_assemble(const AssembleArgs& a, std::ostream& out) {
  std::vector<Fragment> fragments;
  AssembleOptions opts;
  opts.image_cap = a.image_cap;
  for (const auto& page : read_pages_jsonl(a.pages)) {
    auto f = assemble_fragments(page, opts);
    fragments.insert(fragments.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
  }
  write_fragments_jsonl(fragments, a.out);
  const auto s = corpus_stats(fragments);
  out << s.fragments << " fragments: " << s.text_only << " text-only, " << s.with_images << " with images\n";
}

struct SelectArgs {
  std::string graph, out;
  std::vector<std::string> roots;
  std::size_t depth = kDefaultCategoryDepth;
};

void cmd_select(const SelectArgs& a, std::ostream& out) {
  const auto pages = select_pages(read_category_graph(a.graph), a.roots, a.depth);
  std::string text;
  for (const auto& p : pages) text += p + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_text(a.out, text);
  }
  out << pages.size() << " pages selected at depth " << a.depth << "\n";
}

// fixture ----------------------------------------------------------------

struct FixtureArgs {
  std::string out;
  synth::PlantedOptions planted;
};

void cmd_fixture(const FixtureArgs& a, std::ostream& out) {
  const auto corpus = synth::planted_needle_corpus(a.planted);
  fs::create_directories(a.out);
  const fs::path dir(a.out);

  std::vector<Fragment> fragments;
  std::vector<EmbeddingRecord> docs;
  for (const auto& [id, seq] : corpus.docs) {
    fragments.push_back(synth::placeholder_fragment(id));
    docs.push_back({id, seq});
  }
  std::vector<EmbeddingRecord> queries;
  for (const auto& q : corpus.queries) queries.push_back({q.query_id, q.embedded});

  write_fragments_jsonl(fragments, dir / "fragments.jsonl");
  write_embedding_file(dir / "docs.bin", docs, a.planted.dim);
  write_embedding_file(dir / "queries.bin", queries, a.planted.dim);
  write_qrels_tsv(corpus.qrels, dir / "qrels.tsv");
  out << docs.size() << " docs, " << queries.size() << " queries written to " << a.out << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-vector late-interaction retrieval over multimodal fragments", "latefrag"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Build a two-tier index from fragments and their embeddings");
  b->add_option("--input", build.input, "Fragments JSONL")->required()->check(CLI::ExistingFile);
  b->add_option("--embeddings", build.embeddings, "Document embedding file")->required()->check(CLI::ExistingFile);
  b->add_option("--out", build.out, "Index directory to write")->required();
  b->add_option("--k", build.options.k, "Content clusters per doc")->capture_default_str()->check(CLI::PositiveNumber);
  b->add_option("--dim", build.options.dim, "Embedding dimension")->capture_default_str()->check(CLI::PositiveNumber);
  b->add_option("--max-vectors", build.options.max_vectors, "Tier-2 row cap per doc")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  b->add_option("--threads", build.options.threads, "Pooling threads (0 = all cores)")->capture_default_str();
  bool no_normalize = false;
  b->add_flag("--no-normalize", no_normalize, "Keep rows as given instead of L2-normalizing");

  SearchArgs search;
  auto* s = app.add_subcommand("search", "Search an index with one or more query embeddings");
  s->add_option("--index", search.index, "Index directory (default: $LATEFRAG_INDEX)");
  s->add_option("--query-emb", search.query_emb, "Query embedding file")->required()->check(CLI::ExistingFile);
  add_search_params(s, search.params);
  s->add_flag("--one-stage", search.one_stage, "Exhaustive rescoring instead of two-stage search");
  s->add_flag("--full-query", search.full_query, "Use every query row, not just the text rows");
  s->add_flag("--json", search.json, "One JSON result per query line");
  s->add_flag("--no-timings", search.no_timings, "Omit timings from the output");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Run the store x query benchmark grid");
  e->add_option("--index", eval.index, "Index directory (default: $LATEFRAG_INDEX)");
  e->add_option("--queries", eval.queries, "Query embedding file")->required()->check(CLI::ExistingFile);
  e->add_option("--qrels", eval.qrels, "TSV of query_id<TAB>fragment_id")->required()->check(CLI::ExistingFile);
  e->add_option("--configs", eval.configs, "'all' or comma-separated store/query names")->capture_default_str();
  e->add_option("--report", eval.report, "Write the JSON report here");
  add_search_params(e, eval.params);
  e->add_option("--ndcg-k", eval.bench.ndcg_k, "NDCG cutoff")->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--recall-k", eval.bench.recall_k, "Recall cutoff")->capture_default_str()->check(CLI::PositiveNumber);
  e->add_flag("--no-latency", eval.no_latency, "Leave latencies out of the JSON report");

  auto* c = app.add_subcommand("corpus", "Assemble fragments or select pages from a category graph");
  c->require_subcommand(1);
  AssembleArgs assemble;
  std::size_t image_cap = 0;
  auto* ca = c->add_subcommand("assemble", "Turn parsed pages into fragments");
  ca->add_option("--pages", assemble.pages, "Parsed pages JSONL")->required()->check(CLI::ExistingFile);
  ca->add_option("--out", assemble.out, "Fragments JSONL to write")->required();
  auto* cap = ca->add_option("--image-cap", image_cap, "Keep at most this many images per fragment");
  SelectArgs select;
  auto* cs = c->add_subcommand("select", "List pages reachable from root categories");
  cs->add_option("--graph", select.graph, "Category graph JSON")->required()->check(CLI::ExistingFile);
  cs->add_option("--roots", select.roots, "Root categories (repeatable)")->required();
  cs->add_option("--depth", select.depth, "Subcategory levels to descend")->capture_default_str();
  cs->add_option("--out", select.out, "Write titles here instead of standard output");

  FixtureArgs fixture;
  auto* f = app.add_subcommand("fixture", "Write a seeded planted-needle fixture");
  f->add_option("--out", fixture.out, "Output directory")->required();
  f->add_option("--docs", fixture.planted.docs, "Corpus size")->capture_default_str()->check(CLI::PositiveNumber);
  f->add_option("--queries", fixture.planted.queries, "Query count")->capture_default_str();
  f->add_option("--dim", fixture.planted.dim, "Embedding dimension")->capture_default_str()->check(CLI::PositiveNumber);
  f->add_option("--query-tokens", fixture.planted.query_tokens, "Query content rows")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  f->add_option("--image-tokens", fixture.planted.image_tokens, "Image content rows per query (0 = text-only)")
      ->capture_default_str();
  f->add_option("--noise-rows", fixture.planted.noise_rows, "Noise rows in each relevant doc")->capture_default_str();
  f->add_option("--seed", fixture.planted.seed, "Random seed")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*b) {
      build.options.normalize = !no_normalize;
      cmd_build(build, out);
    } else if (*s) {
      cmd_search(search, out);
    } else if (*e) {
      cmd_eval(eval, out);
    } else if (*ca) {
      if (*cap) assemble.image_cap = image_cap;
      cmd_assemble(assemble, out);
    } else if (*cs) {
      cmd_select(select, out);
    } else if (*f) {
      cmd_fixture(fixture, out);
    }
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsage;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kDataError;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace latefrag::cli

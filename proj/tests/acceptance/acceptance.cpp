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

// Acceptance run: one PASS/FAIL line per criterion, each with its own
// runtime limit. Exits non-zero if anything fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gen.hpp"
#include "latefrag/compress.hpp"
#include "latefrag/corpus.hpp"
#include "latefrag/error.hpp"
#include "latefrag/evalbench.hpp"
#include "latefrag/index_store.hpp"
#include "latefrag/licn.hpp"
#include "latefrag/querying.hpp"
#include "latefrag/scoring.hpp"
#include "latefrag/search.hpp"
#include "latefrag/synthetic.hpp"

namespace latefrag {
namespace {

using testing::Rng;
using testing::uniform;
using testing::uniform_real;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

SegmentedSequence random_text_sequence(Rng& rng, std::size_t dim, std::size_t tokens) {
  if (tokens >= 3) return synth::random_text_query(rng, dim, tokens - 2);
  return synth::random_text_query(rng, dim, tokens, 0, 0);
}

Index build_in_memory(const std::vector<std::pair<std::string, SegmentedSequence>>& docs, BuildOptions opts) {
  IndexBuilder b(opts);
  for (const auto& [id, seq] : docs) b.add(id, seq);
  return b.finish();
}

// ---------------------------------------------------------------------------

Outcome kernel_oracle() {
  Outcome o;
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 1000 && o.pass; ++t) {
    const std::size_t n = uniform(rng, 1, 32), m = uniform(rng, 1, 32), d = uniform(rng, 1, 32);
    const auto q = testing::random_matrix(rng, n, d);
    const auto doc = testing::random_matrix(rng, m, d);
    const auto qb = testing::random_bits(rng, n, d);
    const auto db = testing::random_bits(rng, m, d);

    const double e = rel_err(maxsim_exact(q, doc), testing::maxsim_naive(testing::to_rows(q), testing::to_rows(doc)));
    const double a = rel_err(maxsim_asym(q, db.view()),
                             testing::maxsim_naive(testing::to_rows(q), testing::decode_naive(db, 1.0 / std::sqrt(d))));
    const double a2 = rel_err(AsymScorer(q).score(db.view()), maxsim_asym(q, db.view()));
    const auto sym = maxsim_binary_sym(qb.view(), db.view());
    const double naive_sym = testing::maxsim_naive(testing::decode_naive(qb, 1.0), testing::decode_naive(db, 1.0));
    const double exact_sym = maxsim_exact(decode_bits(qb.view(), 1.0), decode_bits(db.view(), 1.0));
    worst = std::max({worst, e, a, a2});
    if (e > 1e-6) o.fail(fmt("exact kernel rel err %.3g", e));
    if (a > 1e-6 || a2 > 1e-6) o.fail(fmt("asym kernel rel err %.3g", std::max(a, a2)));
    if (static_cast<double>(sym) != naive_sym || static_cast<double>(sym) != exact_sym) {
      o.fail(fmt("binary kernel %g vs decoded exact %g", static_cast<double>(sym), exact_sym));
    }
  }
  if (o.pass) o.detail = fmt("1000 instances, worst rel err %.2g, binary exact", worst);
  return o;
}

Outcome pipeline_equivalence() {
  Outcome o;
  Rng rng(202);
  const auto docs = synth::random_corpus(rng, 500, 128);
  const auto index = build_in_memory(docs, {});
  SearchParams p;
  p.n1 = 500;
  p.n2 = 500;
  for (int t = 0; t < 100 && o.pass; ++t) {
    const auto q = compose_text_query(random_text_sequence(rng, 128, uniform(rng, 1, 32)));
    const auto two = search_two_stage(index, q, p);
    const auto one = search_one_stage(index, q, p.n2);
    if (two.hits != one.hits) o.fail("rankings differ on query " + std::to_string(t));
  }
  if (o.pass) o.detail = "100 queries, full 500-item rankings identical";
  return o;
}

struct Planted {
  synth::PlantedCorpus corpus;
  Index index;
};

const Planted& planted() {
  static const Planted p = [] {
    Planted out;
    out.corpus = synth::planted_needle_corpus({});
    BuildOptions b;
    b.k = 8;
    out.index = build_in_memory(out.corpus.docs, b);
    return out;
  }();
  return p;
}

Outcome planted_needle() {
  Outcome o;
  const auto& p = planted();
  SearchParams params;
  params.n1 = 100;
  params.oversample = 2;
  const auto report = run_benchmark(p.index, p.corpus.queries, p.corpus.qrels,
                                    parse_bench_configs("full-one-stage/filtered,pooled-two-stage/filtered", params));
  const double full = report.configs[0].mean_recall, pooled = report.configs[1].mean_recall;
  if (report.query_count != 200 || p.index.size() != 10000) o.fail("unexpected corpus shape");
  if (full != 1.0) o.fail(fmt("full-one-stage R@1 %.4f, want 1.0", full));
  if (pooled < 0.95) o.fail(fmt("pooled-two-stage R@1 %.4f, want >= 0.95", pooled));
  if (o.pass) o.detail = fmt("10000 docs, 200 queries: full R@1 %.3f, pooled R@1 %.3f", full, pooled);
  return o;
}

Outcome pooling_budget() {
  Outcome o;
  Rng rng(404);
  std::size_t checked = 0;
  auto check = [&](const Index& index, const std::vector<std::pair<std::string, SegmentedSequence>>& docs) {
    const auto& man = index.manifest();
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const auto want = std::min(man.k, count_label(docs[i].second, SegmentLabel::DocContent)) + 1;
      const DocId id{i};
      if (man.per_doc_pooled_counts[i] != want || index.pooled(id).count != want) {
        o.fail("doc " + docs[i].first + " has " + std::to_string(index.pooled(id).count) + " tier-1 vectors, want " +
               std::to_string(want));
        return;
      }
      ++checked;
    }
    if (index.tier1_bytes().size() != man.predicted_tier1_bytes()) o.fail("tier-1 size differs from prediction");
  };
  check(planted().index, planted().corpus.docs);
  for (int t = 0; t < 20 && o.pass; ++t) {
    synth::DocShape shape;
    shape.content_min = 1;
    shape.content_max = uniform(rng, 1, 40);
    const std::size_t dim = uniform(rng, 1, 64);
    const auto docs = synth::random_corpus(rng, uniform(rng, 1, 200), dim, shape);
    BuildOptions b;
    b.dim = dim;
    b.k = uniform(rng, 1, 16);
    const auto index = build_in_memory(docs, b);
    check(index, docs);
    testing::TempDir dir;
    write_index(index, dir.path());
    if (std::filesystem::file_size(dir / kTier1File) != index.manifest().predicted_tier1_bytes()) {
      o.fail("tier1.bin size differs from prediction");
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " docs, counts and tier-1 bytes as predicted";
  return o;
}

Outcome filtered_contract() {
  Outcome o;
  Rng rng(505);
  const std::size_t dim = 8;
  std::size_t cases = 0;
  for (int t = 0; t < 2000 && o.pass; ++t) {
    const std::size_t image_tokens = uniform(rng, 16, 1280), query_tokens = uniform(rng, 1, 64);
    SegmentedSequence image{TokenMatrix(dim), {}};
    for (std::size_t i = 0; i < image_tokens + 2; ++i) {
      image.matrix.append_row(synth::random_unit_row(rng, dim));
      image.labels.push_back(i == 0 ? SegmentLabel::ImagePrefix
                                    : i == image_tokens + 1 ? SegmentLabel::ImageSuffix : SegmentLabel::ImageContent);
    }
    const auto text = random_text_sequence(rng, dim, query_tokens);
    const auto composed = compose_multimodal_query(image, text);
    const auto filtered = filter_query_embeddings(composed);
    if (filtered.matrix.rows() != query_tokens || filtered.matrix.rows() != text.matrix.rows()) {
      o.fail(fmt("image %g, query %g: filtered to %g rows", image_tokens, query_tokens, filtered.matrix.rows()));
    }
    ++cases;
  }
  if (o.pass) o.detail = std::to_string(cases) + " layouts, filtered size == query size in all";
  return o;
}

Outcome latency_direction() {
  Outcome o;
  Rng rng(606);
  IndexBuilder b({});
  for (std::size_t i = 0; i < 100000; ++i) b.add("doc-" + std::to_string(i), synth::random_document(rng, 128));
  const auto index = b.finish();
  std::vector<double> one, two;
  for (int t = 0; t < 100; ++t) {
    const auto q = compose_text_query(synth::random_text_query(rng, 128, 14));
    if (q.matrix.rows() != 16) {
      o.fail("query is not 16 tokens");
      return o;
    }
    two.push_back(search_two_stage(index, q).timings.total_us);
    one.push_back(search_one_stage(index, q).timings.total_us);
  }
  const double m1 = median(one), m2 = median(two), ratio = m1 / m2;
  if (ratio < 3.0) o.fail(fmt("median one-stage %.0f us, two-stage %.0f us, ratio %.2f < 3", m1, m2, ratio));
  if (o.pass) o.detail = fmt("median one-stage %.0f us, two-stage %.0f us, ratio %.1fx", m1, m2, ratio);
  return o;
}

licn::Matrix random_matrix_d(Rng& rng, std::size_t r, std::size_t c, double scale) {
  licn::Matrix m(r, c);
  for (auto& x : m.data()) x = uniform_real(rng, -scale, scale);
  return m;
}

licn::LabelMatrix random_labels(Rng& rng, std::size_t r, std::size_t c) {
  std::vector<std::int8_t> e(r * c);
  for (auto& x : e) x = (rng() & 1U) ? 1 : -1;
  return {r, c, std::move(e)};
}

Outcome licn_numerics() {
  using namespace licn;
  Outcome o;
  const double l0 = siglip_loss(Matrix(1, 1, 0.0), LabelMatrix(1, 1, {1}), {1.0, 0.0});
  if (std::abs(l0 - std::numbers::ln2) > 1e-9) o.fail(fmt("loss at zero %.12f, want ln 2", l0));

  Rng rng(707);
  constexpr double h = 1e-5;
  double worst = 0.0;
  auto track = [&](double analytic, double fd, const char* what) {
    const double e = rel_err(analytic, fd, 1e-6);
    worst = std::max(worst, e);
    if (e > 1e-5) o.fail(std::string(what) + fmt(" rel err %.3g", e));
  };
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = uniform(rng, 1, 6), n = uniform(rng, 1, 6), p = uniform(rng, 1, 8);
    const auto ti = random_matrix_d(rng, m, p, 1.0), tq = random_matrix_d(rng, n, p, 1.0);
    const auto y = random_labels(rng, m, n);
    const LossParams lp{uniform_real(rng, 0.3, 3.0), uniform_real(rng, -1.0, 1.0)};
    const auto z = matmul_transposed(ti, tq);
    const auto g = siglip_loss_grad(z, y, lp);
    const auto eg = backprop_to_embeddings(g.d_logits, ti, tq);
    for (std::size_t k = 0; k < z.data().size(); ++k) {
      Matrix up = z, dn = z;
      up.data()[k] += h;
      dn.data()[k] -= h;
      track(g.d_logits.data()[k], (siglip_loss(up, y, lp) - siglip_loss(dn, y, lp)) / (2 * h), "dZ");
    }
    track(g.d_temperature,
          (siglip_loss(z, y, {lp.temperature + h, lp.bias}) - siglip_loss(z, y, {lp.temperature - h, lp.bias})) / (2 * h),
          "dc");
    track(g.d_bias,
          (siglip_loss(z, y, {lp.temperature, lp.bias + h}) - siglip_loss(z, y, {lp.temperature, lp.bias - h})) / (2 * h),
          "db");
    const auto loss = [&](const Matrix& a, const Matrix& b) { return siglip_loss(matmul_transposed(a, b), y, lp); };
    for (std::size_t k = 0; k < ti.data().size(); ++k) {
      Matrix up = ti, dn = ti;
      up.data()[k] += h;
      dn.data()[k] -= h;
      track(eg.d_image.data()[k], (loss(up, tq) - loss(dn, tq)) / (2 * h), "dT_I");
    }
    for (std::size_t k = 0; k < tq.data().size(); ++k) {
      Matrix up = tq, dn = tq;
      up.data()[k] += h;
      dn.data()[k] -= h;
      track(eg.d_labels.data()[k], (loss(ti, up) - loss(ti, dn)) / (2 * h), "dT_q");
    }
  }

  // Separable batch: each image is its class prototype plus small noise.
  const std::size_t images = 24, classes = 4, dim = 10;
  const auto protos = random_matrix_d(rng, classes, dim, 1.0);
  LinearHeadProblem prob;
  prob.image_features = Matrix(images, dim);
  std::vector<std::size_t> truth(images);
  for (std::size_t i = 0; i < images; ++i) {
    truth[i] = i % classes;
    for (std::size_t k = 0; k < dim; ++k) prob.image_features(i, k) = protos(truth[i], k) + uniform_real(rng, -0.1, 0.1);
  }
  prob.label_features = protos;
  prob.labels = LabelMatrix::one_hot(truth, classes);
  LinearHeadOptions fo;
  fo.max_steps = 2000;
  const auto fit = fit_linear_head(prob, fo);
  if (!(fit.final_loss < 0.01) || fit.steps > 2000) {
    o.fail(fmt("linear head loss %.4g after %g steps", fit.final_loss, static_cast<double>(fit.steps)));
  }
  if (o.pass) {
    o.detail = fmt("ln2 ok, worst FD rel err %.2g over 100 shapes, fit loss %.4g in ", worst, fit.final_loss) +
               std::to_string(fit.steps) + " steps";
  }
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  if (ndcg_at_k(std::optional<std::size_t>{1}, 5) != 1.0) o.fail("rank 1 NDCG is not 1");
  if (std::abs(ndcg_at_k(std::optional<std::size_t>{4}, 5) - 0.43068) > 1e-5) o.fail("rank 4 NDCG@5 off");
  if (ndcg_at_k(std::nullopt, 5) != 0.0 || recall_at_k(std::nullopt, 1) != 0.0) o.fail("absent item scores");

  Rng rng(808);
  for (int t = 0; t < 1000 && o.pass; ++t) {
    const std::size_t n = uniform(rng, 0, 30), k = uniform(rng, 1, 20);
    SearchResult r;
    std::vector<std::size_t> ids(40);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      r.hits.push_back({DocId{ids[i]}, "f" + std::to_string(ids[i]), static_cast<double>(n - i)});
    }
    const std::string rel = "f" + std::to_string(uniform(rng, 0, 39));
    // Counting oracle: walk the list, count items seen before the relevant one.
    std::size_t seen = 0;
    bool found = false;
    for (const auto& h : r.hits) {
      ++seen;
      if (h.fragment_id == rel) {
        found = true;
        break;
      }
    }
    const double want_recall = (found && seen <= k) ? 1.0 : 0.0;
    const double want_ndcg = (found && seen <= k) ? std::log(2.0) / std::log(seen + 1.0) : 0.0;
    if (recall_at_k(r, rel, k) != want_recall) o.fail("recall disagrees with counting oracle");
    if (std::abs(ndcg_at_k(r, rel, k) - want_ndcg) > 1e-12) o.fail("NDCG disagrees with counting oracle");
  }
  if (o.pass) o.detail = "hand values and 1000 random rankings agree";
  return o;
}

Outcome corpus_rules() {
  Outcome o;
  Rng rng(909);
  for (int t = 0; t < 1000 && o.pass; ++t) {
    ParsedPage page{"P" + std::to_string(t), {}};
    std::size_t paragraphs = 0;
    const std::size_t n = uniform(rng, 1, 30);
    for (std::size_t i = 0; i < n; ++i) {
      if (uniform(rng, 0, 2) == 0) {
        page.elements.emplace_back(ImageElement{"img" + std::to_string(uniform(rng, 0, 50)) + ".png", "cap"});
      } else {
        page.elements.emplace_back(ParagraphElement{"para " + std::to_string(i), {}});
        ++paragraphs;
      }
    }
    if (paragraphs == 0) {
      page.elements.emplace_back(ParagraphElement{"last", {}});
      ++paragraphs;
    }
    const auto frags = assemble_fragments(page);
    if (frags.size() != paragraphs) o.fail("fragment count != paragraph count on page " + page.title);
    for (std::size_t i = 1; i < frags.size() && o.pass; ++i) {
      const auto& a = frags[i - 1].images;
      const auto& b = frags[i].images;
      if (b.size() < a.size() || !std::equal(a.begin(), a.end(), b.begin())) o.fail("images not cumulative on " + page.title);
    }
  }

  for (int t = 0; t < 100 && o.pass; ++t) {
    CategoryGraph g;
    const std::size_t nc = uniform(rng, 1, 25), np = uniform(rng, 0, 50);
    auto cat = [](std::size_t i) { return "cat" + std::to_string(i); };
    for (std::size_t i = 0; i < nc; ++i) g.add_category(cat(i));
    for (std::size_t i = 0; i < np; ++i) g.add_page("page" + std::to_string(i));
    std::map<std::string, std::vector<std::string>> sub, pages;
    for (std::size_t e = uniform(rng, 0, 3 * nc); e > 0; --e) {
      const auto a = cat(uniform(rng, 0, nc - 1)), b = cat(uniform(rng, 0, nc - 1));
      g.add_subcategory(a, b);
      sub[a].push_back(b);
    }
    for (std::size_t i = 0; i < np; ++i) {
      const auto c = cat(uniform(rng, 0, nc - 1));
      g.add_page_edge(c, "page" + std::to_string(i));
      pages[c].push_back("page" + std::to_string(i));
    }
    std::vector<std::string> roots;
    for (std::size_t r = uniform(rng, 1, 3); r > 0; --r) roots.push_back(cat(uniform(rng, 0, nc - 1)));

    // Memoized recursion on (category, remaining depth).
    std::map<std::pair<std::string, std::size_t>, std::set<std::string>> memo;
    std::function<std::set<std::string>(const std::string&, std::size_t)> reach = [&](const std::string& c,
                                                                                     std::size_t left) {
      const auto key = std::make_pair(c, left);
      if (auto it = memo.find(key); it != memo.end()) return it->second;
      std::set<std::string> out(pages[c].begin(), pages[c].end());
      if (left > 0) {
        for (const auto& s : sub[c]) {
          const auto r = reach(s, left - 1);
          out.insert(r.begin(), r.end());
        }
      }
      return memo[key] = out;
    };
    for (std::size_t depth = 0; depth <= 6; ++depth) {
      std::set<std::string> want;
      for (const auto& r : roots) {
        const auto s = reach(r, depth);
        want.insert(s.begin(), s.end());
      }
      if (select_pages(g, roots, depth) != want) o.fail("select_pages differs from oracle at depth " + std::to_string(depth));
    }
  }
  if (o.pass) o.detail = "1000 pages and 100 graphs x depths 0-6 agree";
  return o;
}

Outcome persistence() {
  Outcome o;
  Rng rng(1010);
  const auto docs = synth::random_corpus(rng, 500, 128);
  const auto before = build_in_memory(docs, {});
  testing::TempDir dir;
  write_index(before, dir.path());
  {
    const auto after = open_index(dir.path());
    if (!std::equal(before.tier1_bytes().begin(), before.tier1_bytes().end(), after.tier1_bytes().begin(),
                    after.tier1_bytes().end()) ||
        !std::equal(before.tier2_bytes().begin(), before.tier2_bytes().end(), after.tier2_bytes().begin(),
                    after.tier2_bytes().end())) {
      o.fail("tier bytes changed across write/open");
    }
    for (int t = 0; t < 50 && o.pass; ++t) {
      const auto q = compose_text_query(random_text_sequence(rng, 128, uniform(rng, 1, 32)));
      const auto a = search_two_stage(before, q), b = search_two_stage(after, q);
      const auto c = search_one_stage(before, q, 20), d = search_one_stage(after, q, 20);
      if (a.hits != b.hits || a.candidates != b.candidates || c.hits != d.hits) o.fail("search differs after reopen");
    }
  }

  const std::vector<std::string> files{kTier1File, kTier2File};
  int detected = 0;
  for (int t = 0; t < 50 && o.pass; ++t) {
    const auto path = dir / files[t % 2];
    const auto size = std::filesystem::file_size(path);
    const auto pos = static_cast<std::streamoff>(uniform(rng, 0, size - 1));
    const auto flip = static_cast<char>(uniform(rng, 1, 255));
    char orig = 0;
    {
      std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
      f.seekg(pos);
      f.get(orig);
      f.seekp(pos);
      f.put(static_cast<char>(orig ^ flip));
    }
    try {
      open_index(dir.path());
      o.fail("corruption at " + files[t % 2] + ":" + std::to_string(pos) + " not detected");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ChecksumMismatch) {
        ++detected;
      } else {
        o.fail(std::string("corruption reported as ") + e.what());
      }
    }
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(pos);
    f.put(orig);
  }
  if (o.pass) o.detail = "500 docs bit-identical after reopen, " + std::to_string(detected) + "/50 corruptions detected";
  return o;
}

struct Criterion {
  const char* name;
  double limit_s;
  Outcome (*run)();
};

}  // namespace
}  // namespace latefrag

int main() {
  using namespace latefrag;
  const Criterion criteria[] = {
      {"kernel-oracle-equivalence", 10, kernel_oracle},
      {"pipeline-equivalence", 30, pipeline_equivalence},
      {"planted-needle-retrieval", 120, planted_needle},
      {"pooling-budget", 120, pooling_budget},
      {"filtered-query-contract", 60, filtered_contract},
      {"latency-direction", 600, latency_direction},
      {"licn-numerics", 60, licn_numerics},
      {"metric-oracles", 60, metric_oracles},
      {"corpus-rules", 60, corpus_rules},
      {"persistence", 60, persistence},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.fail(std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.pass && secs > c.limit_s) out.fail(fmt("took %.1f s, limit %.0f s", secs, c.limit_s));
    failed += out.pass ? 0 : 1;
    std::printf("%s %-28s %6.2f s  %s\n", out.pass ? "PASS" : "FAIL", c.name, secs, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}

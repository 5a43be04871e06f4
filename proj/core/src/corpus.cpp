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

#include "latefrag/corpus.hpp"

#include <deque>
#include <fstream>
#include <json.hpp>

#include "byte_io.hpp"
#include "latefrag/error.hpp"

namespace latefrag {

using json = nlohmann::json;

std::vector<Fragment> assemble_fragments(const ParsedPage& page, const AssembleOptions& options) {
  std::vector<Fragment> out;
  std::vector<FragmentImage> above;
  std::set<std::string> seen;
  for (const auto& element : page.elements) {
    if (const auto* image = std::get_if<ImageElement>(&element)) {
      if (seen.insert(image->image_ref).second) above.push_back({image->image_ref, image->caption});
      continue;
    }
    const auto& para = std::get<ParagraphElement>(element);
    Fragment f;
    f.paragraph_index = out.size();
    f.fragment_id = page.title + "#" + std::to_string(f.paragraph_index);
    f.page_title = page.title;
    f.paragraph_text = para.text;
    f.hyperlinks = para.hyperlinks;
    const std::size_t keep = options.image_cap ? std::min(*options.image_cap, above.size())
                                               : above.size();
    f.images.assign(above.begin(), above.begin() + static_cast<std::ptrdiff_t>(keep));
    out.push_back(std::move(f));
  }
  if (out.empty()) throw Error(ErrorCode::NoParagraphs, "page '" + page.title + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Category graph

void CategoryGraph::add_category(const std::string& name) { categories_.insert(name); }
void CategoryGraph::add_page(const std::string& title) { pages_.insert(title); }

void CategoryGraph::add_subcategory(const std::string& parent, const std::string& child) {
  if (!categories_.contains(parent) || !categories_.contains(child)) {
    throw Error(ErrorCode::InvalidArgument, "subcategory edge " + parent + " -> " + child +
                                                " references an unknown category");
  }
  subcats_[parent].push_back(child);
}

void CategoryGraph::add_page_edge(const std::string& category, const std::string& page) {
  if (!categories_.contains(category) || !pages_.contains(page)) {
    throw Error(ErrorCode::InvalidArgument,
                "page edge " + category + " -> " + page + " references an unknown node");
  }
  page_edges_[category].push_back(page);
}

const std::vector<std::string>& CategoryGraph::subcategories(const std::string& category) const {
  static const std::vector<std::string> kNone;
  auto it = subcats_.find(category);
  return it == subcats_.end() ? kNone : it->second;
}

const std::vector<std::string>& CategoryGraph::pages_of(const std::string& category) const {
  static const std::vector<std::string> kNone;
  auto it = page_edges_.find(category);
  return it == page_edges_.end() ? kNone : it->second;
}

std::set<std::string> select_pages(const CategoryGraph& graph, const std::vector<std::string>& roots,
                                   std::size_t max_depth) {
  for (const auto& r : roots) {
    if (!graph.has_category(r)) throw Error(ErrorCode::UnknownRoot, "category '" + r + "'");
  }
  std::set<std::string> visited;
  std::deque<std::pair<const std::string*, std::size_t>> frontier;
  for (const auto& r : roots) {
    if (visited.insert(r).second) frontier.emplace_back(&r, 0);
  }
  std::set<std::string> selected;
  while (!frontier.empty()) {
    const auto [category, depth] = frontier.front();
    frontier.pop_front();
    for (const auto& p : graph.pages_of(*category)) selected.insert(p);
    if (depth == max_depth) continue;
    for (const auto& child : graph.subcategories(*category)) {
      if (visited.insert(child).second) frontier.emplace_back(&child, depth + 1);
    }
  }
  return selected;
}

// ---------------------------------------------------------------------------
// Layout

LayoutSpec layout_fragment(const Fragment& fragment) {
  LayoutSpec spec;
  for (std::size_t i = 0; i < fragment.images.size(); i += 2) {
    std::vector<LayoutCell> row;
    for (std::size_t j = i; j < std::min(i + 2, fragment.images.size()); ++j) {
      row.push_back({CellKind::Image, fragment.images[j].image_ref});
      row.push_back({CellKind::Caption, fragment.images[j].caption});
    }
    spec.rows.push_back(std::move(row));
  }
  spec.text = fragment.paragraph_text;
  std::size_t from = 0;
  for (const auto& link : fragment.hyperlinks) {
    if (link.surface_text.empty()) continue;
    const auto at = spec.text.find(link.surface_text, from);
    if (at == std::string::npos) continue;
    spec.links.push_back({at, link.surface_text.size(), link.target_title});
    from = at + link.surface_text.size();
  }
  return spec;
}

CorpusStats corpus_stats(const std::vector<Fragment>& fragments) {
  CorpusStats s;
  s.fragments = fragments.size();
  for (const auto& f : fragments) {
    if (f.has_images()) {
      ++s.with_images;
    } else {
      ++s.text_only;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON Lines

namespace {

std::string where(std::size_t line) {
  return line == 0 ? std::string() : "line " + std::to_string(line) + ": ";
}

json parse_line(const std::string& text, std::size_t line) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, where(line) + e.what());
  }
}

const json& field(const json& j, const char* name, std::size_t line) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, where(line) + "expected a JSON object");
  auto it = j.find(name);
  if (it == j.end()) throw Error(ErrorCode::MissingField, where(line) + name);
  return *it;
}

template <typename T>
T get(const json& j, const char* name, std::size_t line) {
  const json& v = field(j, name, line);
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, where(line) + name + ": " + e.what());
  }
}

json links_to_json(const std::vector<Hyperlink>& links) {
  json arr = json::array();
  for (const auto& l : links) {
    arr.push_back({{"surface_text", l.surface_text}, {"target_title", l.target_title}});
  }
  return arr;
}

std::vector<Hyperlink> links_from_json(const json& arr, std::size_t line) {
  if (!arr.is_array()) throw Error(ErrorCode::ParseError, where(line) + "hyperlinks must be an array");
  std::vector<Hyperlink> out;
  for (const auto& l : arr) {
    out.push_back({get<std::string>(l, "surface_text", line), get<std::string>(l, "target_title", line)});
  }
  return out;
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    fn(text, line);
  }
}

void write_lines(const std::filesystem::path& path, const std::string& body) {
  detail::write_file(path, body);
}

}  // namespace

std::string fragment_to_json(const Fragment& f) {
  json images = json::array();
  for (const auto& img : f.images) images.push_back({{"image_ref", img.image_ref}, {"caption", img.caption}});
  json j = {{"fragment_id", f.fragment_id},   {"page_title", f.page_title},
            {"paragraph_index", f.paragraph_index}, {"paragraph_text", f.paragraph_text},
            {"hyperlinks", links_to_json(f.hyperlinks)}, {"images", images}};
  return j.dump();
}

Fragment fragment_from_json(const std::string& text, std::size_t line) {
  const json j = parse_line(text, line);
  Fragment f;
  f.fragment_id = get<std::string>(j, "fragment_id", line);
  f.page_title = get<std::string>(j, "page_title", line);
  f.paragraph_index = get<std::size_t>(j, "paragraph_index", line);
  f.paragraph_text = get<std::string>(j, "paragraph_text", line);
  f.hyperlinks = links_from_json(field(j, "hyperlinks", line), line);
  const json& images = field(j, "images", line);
  if (!images.is_array()) throw Error(ErrorCode::ParseError, where(line) + "images must be an array");
  for (const auto& img : images) {
    f.images.push_back({get<std::string>(img, "image_ref", line), get<std::string>(img, "caption", line)});
  }
  try {
    validate_fragment(f);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, where(line) + e.what());
  }
  return f;
}

void write_fragments_jsonl(const std::vector<Fragment>& fragments, const std::filesystem::path& path) {
  std::string body;
  for (const auto& f : fragments) {
    body += fragment_to_json(f);
    body += '\n';
  }
  write_lines(path, body);
}

void for_each_fragment(const std::filesystem::path& path,
                       const std::function<void(Fragment&&)>& visit) {
  for_each_line(path, [&](const std::string& text, std::size_t line) {
    visit(fragment_from_json(text, line));
  });
}

std::vector<Fragment> read_fragments_jsonl(const std::filesystem::path& path) {
  std::vector<Fragment> out;
  for_each_fragment(path, [&](Fragment&& f) { out.push_back(std::move(f)); });
  return out;
}

std::string page_to_json(const ParsedPage& page) {
  json elements = json::array();
  for (const auto& e : page.elements) {
    if (const auto* p = std::get_if<ParagraphElement>(&e)) {
      elements.push_back({{"type", "paragraph"}, {"text", p->text}, {"hyperlinks", links_to_json(p->hyperlinks)}});
    } else {
      const auto& img = std::get<ImageElement>(e);
      elements.push_back({{"type", "image"}, {"image_ref", img.image_ref}, {"caption", img.caption}});
    }
  }
  return json{{"title", page.title}, {"elements", elements}}.dump();
}

std::vector<ParsedPage> read_pages_jsonl(const std::filesystem::path& path) {
  std::vector<ParsedPage> out;
  for_each_line(path, [&](const std::string& text, std::size_t line) {
    const json j = parse_line(text, line);
    ParsedPage page;
    page.title = get<std::string>(j, "title", line);
    const json& elements = field(j, "elements", line);
    if (!elements.is_array()) throw Error(ErrorCode::ParseError, where(line) + "elements must be an array");
    for (const auto& e : elements) {
      const auto type = get<std::string>(e, "type", line);
      if (type == "paragraph") {
        ParagraphElement p{get<std::string>(e, "text", line), {}};
        if (e.contains("hyperlinks")) p.hyperlinks = links_from_json(e["hyperlinks"], line);
        page.elements.emplace_back(std::move(p));
      } else if (type == "image") {
        std::string caption = e.contains("caption") ? get<std::string>(e, "caption", line) : "";
        page.elements.emplace_back(ImageElement{get<std::string>(e, "image_ref", line), std::move(caption)});
      } else {
        throw Error(ErrorCode::ParseError, where(line) + "unknown element type '" + type + "'");
      }
    }
    out.push_back(std::move(page));
  });
  return out;
}

void write_pages_jsonl(const std::vector<ParsedPage>& pages, const std::filesystem::path& path) {
  std::string body;
  for (const auto& p : pages) {
    body += page_to_json(p);
    body += '\n';
  }
  write_lines(path, body);
}

CategoryGraph category_graph_from_json(const std::string& text) {
  const json j = parse_line(text, 0);
  CategoryGraph g;
  for (const auto& c : get<std::vector<std::string>>(j, "categories", 0)) g.add_category(c);
  for (const auto& p : get<std::vector<std::string>>(j, "pages", 0)) g.add_page(p);
  using Edges = std::vector<std::pair<std::string, std::string>>;
  for (const auto& [a, b] : get<Edges>(j, "subcat_edges", 0)) g.add_subcategory(a, b);
  for (const auto& [a, b] : get<Edges>(j, "page_edges", 0)) g.add_page_edge(a, b);
  return g;
}

CategoryGraph read_category_graph(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return category_graph_from_json(std::string(bytes.begin(), bytes.end()));
}

std::string category_graph_to_json(const CategoryGraph& graph) {
  json subcats = json::array();
  json page_edges = json::array();
  for (const auto& c : graph.categories()) {
    for (const auto& child : graph.subcategories(c)) subcats.push_back({c, child});
    for (const auto& p : graph.pages_of(c)) page_edges.push_back({c, p});
  }
  json j = {{"categories", graph.categories()}, {"pages", graph.pages()},
            {"subcat_edges", subcats}, {"page_edges", page_edges}};
  return j.dump();
}

}  // namespace latefrag

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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "latefrag/types.hpp"

namespace latefrag {

struct ParagraphElement {
  std::string text;
  std::vector<Hyperlink> hyperlinks;

  friend bool operator==(const ParagraphElement&, const ParagraphElement&) = default;
};

struct ImageElement {
  std::string image_ref;
  std::string caption;

  friend bool operator==(const ImageElement&, const ImageElement&) = default;
};

using PageElement = std::variant<ParagraphElement, ImageElement>;

/// A page as extracted from its source: paragraphs and images in source order.
struct ParsedPage {
  std::string title;
  std::vector<PageElement> elements;

  friend bool operator==(const ParsedPage&, const ParsedPage&) = default;
};

struct AssembleOptions {
  /// Keep at most this many images per fragment (the earliest ones).
  std::optional<std::size_t> image_cap;
};

/// One fragment per paragraph. Fragment i carries every image that appears
/// before paragraph i on the page, in page order, with repeated image refs
/// kept once. Ids are "<title>#<paragraph index>". Throws
/// Error(NoParagraphs).
std::vector<Fragment> assemble_fragments(const ParsedPage& page, const AssembleOptions& options = {});

/// Category hierarchy: category -> subcategory and category -> page edges.
class CategoryGraph {
 public:
  void add_category(const std::string& name);
  void add_page(const std::string& title);
  /// Both endpoints must exist; throws Error(InvalidArgument) otherwise.
  void add_subcategory(const std::string& parent, const std::string& child);
  void add_page_edge(const std::string& category, const std::string& page);

  bool has_category(const std::string& name) const { return categories_.contains(name); }
  const std::set<std::string>& categories() const noexcept { return categories_; }
  const std::set<std::string>& pages() const noexcept { return pages_; }
  const std::vector<std::string>& subcategories(const std::string& category) const;
  const std::vector<std::string>& pages_of(const std::string& category) const;

 private:
  std::set<std::string> categories_;
  std::set<std::string> pages_;
  std::map<std::string, std::vector<std::string>> subcats_;
  std::map<std::string, std::vector<std::string>> page_edges_;
};

/// Breadth-first walk from `roots` (depth 0) along subcategory edges down to
/// `max_depth`, collecting the pages of every visited category. Each
/// category is visited once, at its shallowest depth. Throws
/// Error(UnknownRoot).
std::set<std::string> select_pages(const CategoryGraph& graph, const std::vector<std::string>& roots,
                                   std::size_t max_depth = 5);

inline constexpr std::size_t kDefaultCategoryDepth = 5;

enum class CellKind { Image, Caption };

struct LayoutCell {
  CellKind kind;
  std::string content;  // image_ref or caption text

  friend bool operator==(const LayoutCell&, const LayoutCell&) = default;
};

struct LinkSpan {
  std::size_t offset;  // byte offset into the text block
  std::size_t length;
  std::string target_title;

  friend bool operator==(const LinkSpan&, const LinkSpan&) = default;
};

/// Rendering plan of a fragment: an image/caption grid of four cells per row
/// (the last row may hold a single pair) above the paragraph text.
struct LayoutSpec {
  std::vector<std::vector<LayoutCell>> rows;
  std::string text;
  std::vector<LinkSpan> links;

  bool text_only() const noexcept { return rows.empty(); }
};

/// Link spans are located by searching each hyperlink's surface text in
/// order, starting after the previous match; unmatched links are skipped.
LayoutSpec layout_fragment(const Fragment& fragment);

struct CorpusStats {
  std::size_t fragments = 0;
  std::size_t text_only = 0;
  std::size_t with_images = 0;
};

CorpusStats corpus_stats(const std::vector<Fragment>& fragments);

// JSON Lines I/O. Parse failures throw Error(ParseError) or
// Error(MissingField) with the 1-based line number in the message.

std::string fragment_to_json(const Fragment& fragment);
Fragment fragment_from_json(const std::string& line, std::size_t line_number = 0);

void write_fragments_jsonl(const std::vector<Fragment>& fragments, const std::filesystem::path& path);
void for_each_fragment(const std::filesystem::path& path,
                       const std::function<void(Fragment&&)>& visit);
std::vector<Fragment> read_fragments_jsonl(const std::filesystem::path& path);

std::string page_to_json(const ParsedPage& page);
std::vector<ParsedPage> read_pages_jsonl(const std::filesystem::path& path);
void write_pages_jsonl(const std::vector<ParsedPage>& pages, const std::filesystem::path& path);

/// {"categories":[..],"pages":[..],"subcat_edges":[[parent,child]..],
///  "page_edges":[[category,page]..]}
CategoryGraph category_graph_from_json(const std::string& text);
CategoryGraph read_category_graph(const std::filesystem::path& path);
std::string category_graph_to_json(const CategoryGraph& graph);

}  // namespace latefrag

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dsx/parallel.hpp"
#include "dsx/xpath.hpp"

namespace dsx {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Attribute keys kept on nodes; `tag` mirrors the element name.
inline constexpr std::string_view kKeptAttributes[] = {"tag",      "class",    "id",
                                                      "itemprop", "itemtype", "property"};

struct DomNode {
  XPath xpath;
  std::string path;  // xpath.str(), cached
  std::string tag;
  std::map<std::string, std::string> attrs;
  std::string text;  // direct text children, whitespace-collapsed
  std::string norm;  // normalize_surface(text)

  int parent = -1;
  std::vector<int> children;
  int subtree_end = 0;  // one past the last descendant in document order
  int depth = 0;        // root is 0
  int sibling_pos = 0;  // position among the parent's element children
};

/// A parsed page: nodes in document (pre-)order, root at index 0.
class Page {
 public:
  Page() = default;
  Page(std::string page_id, std::vector<DomNode> nodes);

  const std::string& page_id() const { return page_id_; }
  std::span<const DomNode> nodes() const { return nodes_; }
  const DomNode& node(std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }

  std::optional<std::size_t> find(const XPath& xpath) const;
  std::optional<std::size_t> find(std::string_view path) const;

  /// True when `descendant` is `ancestor` or lies inside its subtree.
  bool contains(std::size_t ancestor, std::size_t descendant) const {
    return descendant >= ancestor &&
           descendant < static_cast<std::size_t>(nodes_[ancestor].subtree_end);
  }

  /// Nodes with nonempty text, in document order.
  std::vector<std::size_t> text_nodes() const;

 private:
  std::string page_id_;
  std::vector<DomNode> nodes_;
  std::unordered_map<std::string, std::size_t> by_path_;
};

/// Tag-soup HTML to a simplified element tree. Throws ParseError on empty input.
Page parse_page(std::string_view html, std::string page_id);

/// Template clustering stand-in: single-linkage agglomeration of pages by
/// Jaccard similarity of their index-free path sets, merging while the best
/// pair similarity is at least `sim_threshold`. Clusters are lists of page
/// positions, each sorted, ordered by their first member.
std::vector<std::vector<std::size_t>> cluster_templates(std::span<const Page> pages,
                                                        double sim_threshold,
                                                        Exec exec = Exec::Parallel);

/// Jaccard similarity matrix over page shape sets (row-major, n x n).
std::vector<double> shape_similarity_matrix(std::span<const Page> pages, Exec exec);

}  // namespace dsx

#include <omp.h>

#include "dsx/dom.hpp"
#include "dsx/parallel.hpp"
#include "dsx/text.hpp"

namespace dsx {

int max_threads() { return omp_get_max_threads(); }

Page::Page(std::string page_id, std::vector<DomNode> nodes)
    : page_id_(std::move(page_id)), nodes_(std::move(nodes)) {
  by_path_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    DomNode& n = nodes_[i];
    if (n.path.empty()) n.path = n.xpath.str();
    n.norm = normalize_surface(n.text);
    if (!by_path_.emplace(n.path, i).second) throw ParseError("duplicate xpath " + n.path);
  }
}

std::optional<std::size_t> Page::find(std::string_view path) const {
  auto it = by_path_.find(std::string(path));
  if (it == by_path_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Page::find(const XPath& xpath) const { return find(xpath.str()); }

std::vector<std::size_t> Page::text_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!nodes_[i].text.empty()) out.push_back(i);
  return out;
}

}  // namespace dsx

#include "dsx/features.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <stdexcept>

namespace dsx {

namespace {

void append_escaped(std::string& out, std::string_view s) {
  for (char c : s) {
    if (c == '|' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
}

std::vector<std::string> split_escaped(std::string_view key) {
  std::vector<std::string> parts(1);
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (key[i] == '\\' && i + 1 < key.size()) {
      parts.back().push_back(key[++i]);
    } else if (key[i] == '|') {
      parts.emplace_back();
    } else {
      parts.back().push_back(key[i]);
    }
  }
  return parts;
}

int to_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad feature key number: " + s);
  return v;
}

}  // namespace

std::string feature_key(const Feature& feature) {
  std::string out;
  if (const auto* s = std::get_if<StructuralFeature>(&feature)) {
    out = "S|";
    append_escaped(out, s->attr);
    out += '|';
    append_escaped(out, s->value);
    out += '|' + std::to_string(s->level) + '|' + std::to_string(s->offset);
  } else {
    const auto& t = std::get<TextFeature>(feature);
    out = "T|";
    append_escaped(out, t.text);
    out += '|';
    append_escaped(out, t.rel_path);
  }
  return out;
}

Feature parse_feature_key(std::string_view key) {
  const auto parts = split_escaped(key);
  if (parts.size() == 5 && parts[0] == "S")
    return StructuralFeature{parts[1], parts[2], to_int(parts[3]), to_int(parts[4])};
  if (parts.size() == 3 && parts[0] == "T") return TextFeature{parts[1], parts[2]};
  throw std::invalid_argument("bad feature key: " + std::string(key));
}

FrequentStrings frequent_strings(std::span<const Page> pages, double min_page_fraction,
                                 std::size_t max_length, Exec exec) {
  if (!(min_page_fraction > 0.0 && min_page_fraction <= 1.0))
    throw std::invalid_argument("min_page_fraction must be in (0, 1]");
  std::vector<std::vector<std::string>> per_page(pages.size());
  parallel_for(exec, pages.size(), [&](std::size_t i) {
    auto& v = per_page[i];
    for (const auto& n : pages[i].nodes())
      if (!n.norm.empty() && n.norm.size() <= max_length) v.push_back(n.norm);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  });
  std::map<std::string, std::size_t> counts;
  for (const auto& v : per_page)
    for (const auto& s : v) ++counts[s];
  FrequentStrings out;
  const double needed = min_page_fraction * static_cast<double>(pages.size());
  for (const auto& [s, c] : counts)
    if (static_cast<double>(c) >= needed) out.insert(s);
  return out;
}

FeatureSet node_features(const Page& page, std::size_t node, const FrequentStrings& freq) {
  FeatureSet out;

  // Structural: the node and every ancestor, each with its siblings.
  int level = 0;
  for (int a = static_cast<int>(node); a >= 0; a = page.node(static_cast<std::size_t>(a)).parent, ++level) {
    const DomNode& anc = page.node(static_cast<std::size_t>(a));
    if (anc.parent < 0) {
      for (const auto& [k, v] : anc.attrs) out.insert(StructuralFeature{k, v, level, 0});
      continue;
    }
    const auto& siblings = page.node(static_cast<std::size_t>(anc.parent)).children;
    const int count = static_cast<int>(siblings.size());
    for (int off = -kSiblingWidth; off <= kSiblingWidth; ++off) {
      const int pos = anc.sibling_pos + off;
      if (pos < 0 || pos >= count) continue;
      for (const auto& [k, v] : page.node(static_cast<std::size_t>(siblings[pos])).attrs)
        out.insert(StructuralFeature{k, v, level, off});
    }
  }

  // Text: frequent strings within kTextRadius tree edges.
  if (freq.empty()) return out;
  const auto visit = [&](std::size_t n, const std::string& path) {
    const auto& norm = page.node(n).norm;
    if (!norm.empty() && freq.contains(norm)) out.insert(TextFeature{norm, path.empty() ? "." : path});
  };
  // Descend from `from` up to `budget` levels, skipping the subtree `skip`.
  const auto descend = [&](auto&& self, std::size_t from, int budget, int skip, const std::string& path) -> void {
    if (budget == 0) return;
    for (int c : page.node(from).children) {
      if (c == skip) continue;
      const std::string child_path = (path.empty() ? "" : path + "/") + page.node(static_cast<std::size_t>(c)).tag;
      visit(static_cast<std::size_t>(c), child_path);
      self(self, static_cast<std::size_t>(c), budget - 1, -1, child_path);
    }
  };

  std::string up_path;
  int previous = -1;
  int current = static_cast<int>(node);
  for (int ups = 0; ups <= kTextRadius && current >= 0; ++ups) {
    visit(static_cast<std::size_t>(current), up_path);
    descend(descend, static_cast<std::size_t>(current), kTextRadius - ups, previous, up_path);
    previous = current;
    current = page.node(static_cast<std::size_t>(current)).parent;
    up_path = up_path.empty() ? ".." : up_path + "/..";
  }
  return out;
}

FeatureVocabulary::FeatureVocabulary(std::vector<std::string> keys) {
  for (auto& k : keys) {
    if (index_.contains(k)) throw std::invalid_argument("duplicate vocabulary key: " + k);
    add(k);
  }
}

std::optional<std::uint32_t> FeatureVocabulary::find(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t FeatureVocabulary::add(const std::string& key) {
  auto [it, inserted] = index_.emplace(key, static_cast<std::uint32_t>(keys_.size()));
  if (inserted) keys_.push_back(key);
  return it->second;
}

FeatureVector vectorize(const FeatureSet& features, FeatureVocabulary& vocab, bool training) {
  if (!training) return vectorize(features, std::as_const(vocab));
  FeatureVector v;
  for (const auto& f : features) v.indices.push_back(vocab.add(feature_key(f)));
  std::sort(v.indices.begin(), v.indices.end());
  v.indices.erase(std::unique(v.indices.begin(), v.indices.end()), v.indices.end());
  return v;
}

FeatureVector vectorize(const FeatureSet& features, const FeatureVocabulary& vocab) {
  FeatureVector v;
  for (const auto& f : features)
    if (auto i = vocab.find(feature_key(f))) v.indices.push_back(*i);
  std::sort(v.indices.begin(), v.indices.end());
  v.indices.erase(std::unique(v.indices.begin(), v.indices.end()), v.indices.end());
  return v;
}

}  // namespace dsx

#include "dsx/annotate.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <unordered_map>

#include "dsx/text.hpp"

namespace dsx {

namespace {

struct ObjectMentions {
  MentionKey key;
  std::string value_key;            // identifies the object value across pages
  std::vector<std::size_t> nodes;   // document order
};

std::vector<ObjectMentions> collect_mentions(const Page& page, const TopicAssignment& topic,
                                             const KnowledgeBase& kb) {
  std::vector<ObjectMentions> out;
  auto subject = kb.index_of(topic.entity);
  if (!subject) return out;

  std::vector<std::pair<std::size_t, std::string_view>> texts;
  for (std::size_t n = 0; n < page.size(); ++n)
    if (!page.node(n).norm.empty()) texts.emplace_back(n, page.node(n).norm);

  std::map<MentionKey, std::size_t> slot;
  for (auto t : kb.triples_of(*subject)) {
    const Triple& triple = kb.triples()[t];
    MentionKey key{triple.predicate, triple.object};
    if (slot.contains(key)) continue;
    const auto surfaces = kb.object_surfaces(triple.object);
    std::vector<std::size_t> nodes;
    for (const auto& [n, norm] : texts) {
      for (const auto& s : surfaces) {
        if (surfaces_match(norm, s, kb.match_mode())) {
          nodes.push_back(n);
          break;
        }
      }
    }
    if (nodes.empty()) continue;
    std::string value_key = triple.object.is_entity() ? "e:" + triple.object.value
                                                      : "l:" + normalize_surface(triple.object.value);
    slot.emplace(key, out.size());
    out.push_back({std::move(key), std::move(value_key), std::move(nodes)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return out;
}

std::vector<std::size_t> best_local_nodes(const Page& page, std::span<const std::size_t> mentions,
                                          std::span<const std::size_t> predicate_nodes) {
  std::vector<std::size_t> best;
  std::size_t best_count = 0;
  for (std::size_t m : mentions) {
    std::size_t anchor = m;
    while (true) {
      const int parent = page.node(anchor).parent;
      if (parent < 0) break;
      const auto p = static_cast<std::size_t>(parent);
      const bool holds_other = std::any_of(mentions.begin(), mentions.end(), [&](std::size_t o) {
        return o != m && page.contains(p, o);
      });
      if (holds_other) break;
      anchor = p;
    }
    const auto count = static_cast<std::size_t>(std::count_if(
        predicate_nodes.begin(), predicate_nodes.end(), [&](std::size_t q) { return page.contains(anchor, q); }));
    if (best.empty() || count > best_count) {
      best_count = count;
      best.assign(1, m);
    } else if (count == best_count) {
      best.push_back(m);
    }
  }
  return best;
}

std::vector<std::size_t> to_nodes(const Page& page, std::span<const XPath> xpaths) {
  std::vector<std::size_t> out;
  for (const auto& x : xpaths) {
    auto n = page.find(x);
    if (!n) throw std::invalid_argument("xpath not on page " + page.page_id() + ": " + x.str());
    if (std::find(out.begin(), out.end(), *n) == out.end()) out.push_back(*n);
  }
  return out;
}

}  // namespace

std::map<MentionKey, std::vector<XPath>> object_mentions(const Page& page, const TopicAssignment& topic,
                                                         const KnowledgeBase& kb) {
  std::map<MentionKey, std::vector<XPath>> out;
  for (auto& om : collect_mentions(page, topic, kb)) {
    auto& paths = out[om.key];
    for (std::size_t n : om.nodes) paths.push_back(page.node(n).xpath);
  }
  return out;
}

std::vector<XPath> best_local_mention(const Page& page, std::span<const XPath> mentions,
                                      std::span<const XPath> predicate_object_xpaths) {
  if (mentions.empty()) throw std::invalid_argument("best_local_mention needs at least one mention");
  const auto m = to_nodes(page, mentions);
  const auto p = to_nodes(page, predicate_object_xpaths);
  std::vector<XPath> out;
  for (std::size_t n : best_local_nodes(page, m, p)) out.push_back(page.node(n).xpath);
  return out;
}

XPathClustering cluster_object_xpaths(std::span<const XPath> xpaths, std::size_t k, Exec exec) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  XPathClustering result;
  if (xpaths.empty()) return result;

  std::vector<XPath> unique(xpaths.begin(), xpaths.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const std::size_t n = unique.size();

  // Condensed upper triangle, row i holds pairs (i, j > i).
  const auto row_start = [n](std::size_t i) { return i * n - i * (i + 1) / 2; };
  std::vector<std::uint8_t> dist(n * (n - 1) / 2);
  std::uint8_t max_dist = 0;
  parallel_for(exec, n, [&](std::size_t i) {
    std::uint8_t* row = dist.data() + row_start(i);
    for (std::size_t j = i + 1; j < n; ++j)
      row[j - i - 1] = static_cast<std::uint8_t>(std::min<std::size_t>(xpath_distance(unique[i], unique[j]), 255));
  });
  for (auto d : dist) max_dist = std::max(max_dist, d);

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n;
  for (unsigned level = 0; level <= max_dist && components > k; ++level) {
    for (std::size_t i = 0; i < n && components > k; ++i) {
      const std::uint8_t* row = dist.data() + row_start(i);
      for (std::size_t j = i + 1; j < n && components > k; ++j) {
        if (row[j - i - 1] != level) continue;
        const auto a = root(i);
        const auto b = root(j);
        if (a == b) continue;
        parent[std::max(a, b)] = std::min(a, b);
        --components;
      }
    }
  }

  std::vector<long> cluster_of_root(n, -1);
  std::vector<std::size_t> unique_label(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = root(i);
    if (cluster_of_root[r] < 0) {
      cluster_of_root[r] = static_cast<long>(result.size.size());
      result.size.push_back(0);
    }
    unique_label[i] = static_cast<std::size_t>(cluster_of_root[r]);
  }
  result.label.reserve(xpaths.size());
  for (const auto& x : xpaths) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(unique.begin(), unique.end(), x) - unique.begin());
    result.label.push_back(unique_label[pos]);
    ++result.size[unique_label[pos]];
  }
  return result;
}

namespace {

struct PageWork {
  std::size_t page = 0;
  const TopicAssignment* topic = nullptr;
  std::vector<ObjectMentions> objects;
  std::vector<std::vector<std::size_t>> local_best;  // parallel to objects
};

struct ClusterInfo {
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> by_path;  // label, size
};

}  // namespace

AnnotationResult annotate_site(std::span<const Page> pages, const TopicMap& topics, const KnowledgeBase& kb,
                               const AnnotateParams& params, Exec exec) {
  std::vector<PageWork> work;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    auto it = topics.find(pages[i].page_id());
    if (it != topics.end()) work.push_back({i, &it->second, {}, {}});
  }

  parallel_for(exec, work.size(), [&](std::size_t w) {
    PageWork& pw = work[w];
    const Page& page = pages[pw.page];
    pw.objects = collect_mentions(page, *pw.topic, kb);
    if (params.mode != AnnotationMode::Full) return;
    std::map<std::string, std::vector<std::size_t>> predicate_nodes;
    for (const auto& om : pw.objects) {
      auto& v = predicate_nodes[om.key.predicate];
      v.insert(v.end(), om.nodes.begin(), om.nodes.end());
    }
    for (auto& [_, v] : predicate_nodes) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    for (const auto& om : pw.objects)
      pw.local_best.push_back(best_local_nodes(page, om.nodes, predicate_nodes[om.key.predicate]));
  });

  AnnotationResult result;

  std::map<std::string, ClusterInfo> clusters;
  if (params.mode == AnnotationMode::Full) {
    // Predicates where one value is a candidate on most topic pages.
    std::map<std::pair<std::string, std::string>, std::size_t> value_pages;
    for (const auto& pw : work)
      for (const auto& om : pw.objects) ++value_pages[{om.key.predicate, om.value_key}];
    const double limit = params.duplicate_page_fraction * static_cast<double>(work.size());
    for (const auto& [key, count] : value_pages)
      if (static_cast<double>(count) > limit) result.duplicated_predicates.insert(key.first);

    std::set<std::string> need_clusters = result.duplicated_predicates;
    for (const auto& pw : work)
      for (std::size_t o = 0; o < pw.objects.size(); ++o)
        if (pw.local_best[o].size() > 1) need_clusters.insert(pw.objects[o].key.predicate);

    for (const auto& predicate : need_clusters) {
      std::vector<XPath> paths;
      std::size_t k = 1;
      for (const auto& pw : work)
        for (const auto& om : pw.objects) {
          if (om.key.predicate != predicate) continue;
          k = std::max(k, om.nodes.size());
          for (std::size_t n : om.nodes) paths.push_back(pages[pw.page].node(n).xpath);
        }
      const auto clustering = cluster_object_xpaths(paths, k, exec);
      ClusterInfo& info = clusters[predicate];
      for (std::size_t i = 0; i < paths.size(); ++i)
        info.by_path.emplace(paths[i].str(),
                             std::make_pair(clustering.label[i], clustering.size[clustering.label[i]]));
    }
  }

  std::vector<std::vector<std::pair<std::size_t, Annotation>>> per_page(work.size());
  std::vector<int> relation_counts(work.size(), 0);
  parallel_for(exec, work.size(), [&](std::size_t w) {
    const PageWork& pw = work[w];
    const Page& page = pages[pw.page];
    auto& out = per_page[w];
    const auto emit = [&](std::size_t node, const std::string& predicate, std::optional<EntityId> entity) {
      out.emplace_back(node, Annotation{page.page_id(), page.node(node).xpath, predicate, page.node(node).text,
                                        std::move(entity)});
    };

    for (std::size_t o = 0; o < pw.objects.size(); ++o) {
      const ObjectMentions& om = pw.objects[o];
      std::optional<EntityId> entity;
      if (om.key.object.is_entity()) entity = om.key.object.value;
      if (params.mode == AnnotationMode::TopicOnly) {
        for (std::size_t n : om.nodes) emit(n, om.key.predicate, entity);
        relation_counts[w] += static_cast<int>(om.nodes.size());
        continue;
      }

      std::optional<std::size_t> chosen;
      const auto& local = pw.local_best[o];
      if (result.duplicated_predicates.contains(om.key.predicate)) {
        const ClusterInfo& info = clusters.at(om.key.predicate);
        std::size_t largest = 0;
        std::vector<std::size_t> winners;
        std::set<std::size_t> winner_labels;
        for (std::size_t n : om.nodes) {
          const auto& [label, size] = info.by_path.at(page.node(n).path);
          if (size > largest) {
            largest = size;
            winners.assign(1, n);
            winner_labels = {label};
          } else if (size == largest) {
            winners.push_back(n);
            winner_labels.insert(label);
          }
        }
        if (winner_labels.size() == 1) {
          if (winners.size() == 1) {
            chosen = winners.front();
          } else {
            std::vector<std::size_t> both;
            for (std::size_t n : winners)
              if (std::find(local.begin(), local.end(), n) != local.end()) both.push_back(n);
            if (both.size() == 1) chosen = both.front();
          }
        }
      } else if (local.size() == 1) {
        chosen = local.front();
      }
      if (chosen) {
        emit(*chosen, om.key.predicate, entity);
        ++relation_counts[w];
      }
    }
    if (auto anchor = page.find(pw.topic->anchor_xpath))
      emit(*anchor, std::string(kNamePredicate), pw.topic->entity);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return std::tie(a.first, a.second.predicate, a.second.object_text) <
             std::tie(b.first, b.second.predicate, b.second.object_text);
    });
  });

  std::vector<std::size_t> order(work.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pages[work[a].page].page_id() < pages[work[b].page].page_id();
  });
  for (std::size_t w : order) {
    if (relation_counts[w] < params.min_annotations) continue;
    result.admitted_pages.insert(pages[work[w].page].page_id());
    for (auto& [_, a] : per_page[w]) result.annotations.push_back(std::move(a));
  }
  return result;
}

}  // namespace dsx

#include "dsx/topic.hpp"

#include <algorithm>
#include <unordered_map>

#include "dsx/text.hpp"

namespace dsx {

using Index = KnowledgeBase::Index;

PageMatches match_page(const Page& page, const KnowledgeBase& kb, const StopValues& stop) {
  PageMatches out;
  out.by_node.resize(page.size());
  std::unordered_map<std::string, std::vector<Index>> cache;
  for (std::size_t i = 0; i < page.size(); ++i) {
    const std::string& norm = page.node(i).norm;
    if (norm.empty() || stop.contains(norm)) continue;
    auto it = cache.find(norm);
    if (it == cache.end()) it = cache.emplace(norm, kb.match_normalized(norm)).first;
    out.by_node[i] = it->second;
    out.page_set.insert(out.page_set.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.page_set.begin(), out.page_set.end());
  out.page_set.erase(std::unique(out.page_set.begin(), out.page_set.end()), out.page_set.end());
  return out;
}

std::vector<std::pair<Index, double>> score_page(const PageMatches& matches,
                                                 const KnowledgeBase& kb) {
  std::vector<std::pair<Index, double>> scores;
  scores.reserve(matches.page_set.size());
  const auto& page_set = matches.page_set;
  for (Index e : page_set) {
    std::vector<Index> objects;
    for (const auto& surface : kb.entity_object_set(e)) {
      auto ids = kb.match_normalized(surface);
      objects.insert(objects.end(), ids.begin(), ids.end());
    }
    std::sort(objects.begin(), objects.end());
    objects.erase(std::unique(objects.begin(), objects.end()), objects.end());

    std::size_t common = 0;
    auto a = page_set.begin();
    auto b = objects.begin();
    while (a != page_set.end() && b != objects.end()) {
      if (*a < *b) {
        ++a;
      } else if (*b < *a) {
        ++b;
      } else {
        ++common;
        ++a;
        ++b;
      }
    }
    const std::size_t uni = page_set.size() + objects.size() - common;
    scores.emplace_back(e, uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni));
  }
  return scores;
}

EntityScores score_entities(const Page& page, const KnowledgeBase& kb, const StopValues& stop) {
  EntityScores out;
  for (const auto& [e, s] : score_page(match_page(page, kb, stop), kb)) out[kb.entity(e).id] = s;
  return out;
}

std::optional<std::pair<EntityId, double>> candidate_topic(const EntityScores& scores) {
  std::optional<std::pair<EntityId, double>> best;
  // std::map iterates in id order, so strict > keeps the smallest id on ties.
  for (const auto& [id, s] : scores)
    if (!best || s > best->second) best.emplace(id, s);
  return best;
}

namespace {

struct PageState {
  PageMatches matches;
  std::vector<std::pair<Index, double>> scores;
  std::optional<Index> candidate;

  double score_of(Index e) const {
    auto it = std::lower_bound(scores.begin(), scores.end(), std::make_pair(e, -1.0));
    return (it != scores.end() && it->first == e) ? it->second : 0.0;
  }
};

// Argmax by score, ties to the smallest entity id string.
template <typename Range, typename Accept>
std::optional<std::pair<Index, double>> best_entity(const Range& candidates, const KnowledgeBase& kb,
                                                    Accept&& accept) {
  std::optional<std::pair<Index, double>> best;
  for (const auto& [e, s] : candidates) {
    if (!accept(e, s)) continue;
    if (!best || s > best->second ||
        (s == best->second && kb.entity(e).id < kb.entity(best->first).id))
      best.emplace(e, s);
  }
  return best;
}

}  // namespace

TopicMap assign_topics(std::span<const Page> pages, const KnowledgeBase& kb, const StopValues& stop,
                       const TopicParams& params, Exec exec) {
  std::vector<PageState> state(pages.size());
  parallel_for(exec, pages.size(), [&](std::size_t i) {
    PageState& st = state[i];
    st.matches = match_page(pages[i], kb, stop);
    st.scores = score_page(st.matches, kb);
    if (auto c = best_entity(st.scores, kb, [](Index, double) { return true; })) st.candidate = c->first;
  });

  // Uniqueness: drop entities that are the candidate of too many pages.
  std::unordered_map<Index, int> candidacy;
  for (const auto& st : state)
    if (st.candidate) ++candidacy[*st.candidate];
  const auto discarded = [&](Index e) {
    auto it = candidacy.find(e);
    return it != candidacy.end() && it->second >= params.uniqueness_max;
  };

  // Dominant paths of the surviving candidates' mentions.
  std::map<std::string, std::size_t> path_counts;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const auto& st = state[i];
    if (!st.candidate || discarded(*st.candidate)) continue;
    for (std::size_t n = 0; n < pages[i].size(); ++n) {
      const auto& m = st.matches.by_node[n];
      if (std::binary_search(m.begin(), m.end(), *st.candidate)) ++path_counts[pages[i].node(n).path];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranking(path_counts.begin(), path_counts.end());
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::optional<TopicAssignment>> assigned(pages.size());
  parallel_for(exec, pages.size(), [&](std::size_t i) {
    const Page& page = pages[i];
    const PageState& st = state[i];
    for (const auto& [path, count] : ranking) {
      auto node = page.find(path);
      if (!node) continue;
      std::vector<std::pair<Index, double>> options;
      for (Index e : st.matches.by_node[*node]) options.emplace_back(e, st.score_of(e));
      auto best = best_entity(options, kb, [&](Index e, double s) { return s > 0.0 && !discarded(e); });
      if (best)
        assigned[i] = TopicAssignment{page.page_id(), kb.entity(best->first).id,
                                      page.node(*node).xpath, best->second};
      break;
    }
  });

  TopicMap out;
  for (auto& a : assigned)
    if (a) out.emplace(a->page_id, std::move(*a));
  return out;
}

}  // namespace dsx

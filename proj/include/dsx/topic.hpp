#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsx/dom.hpp"
#include "dsx/kb.hpp"
#include "dsx/parallel.hpp"

namespace dsx {

struct TopicParams {
  // An entity that is the local candidate on this many pages is discarded.
  int uniqueness_max = 5;
};

struct TopicAssignment {
  std::string page_id;
  EntityId entity;
  XPath anchor_xpath;
  double score = 0.0;

  bool operator==(const TopicAssignment&) const = default;
};

using EntityScores = std::map<EntityId, double>;
using TopicMap = std::map<std::string, TopicAssignment>;

/// Jaccard score of every entity mentioned on the page. The page set is the
/// entities matched by node texts outside the stop values; an entity's object
/// set is the entities matched by its objects' surfaces.
EntityScores score_entities(const Page& page, const KnowledgeBase& kb, const StopValues& stop);

/// Highest score; ties go to the smallest entity id.
std::optional<std::pair<EntityId, double>> candidate_topic(const EntityScores& scores);

/// Site-level topic identification over pages from one template.
TopicMap assign_topics(std::span<const Page> pages, const KnowledgeBase& kb, const StopValues& stop,
                       const TopicParams& params = {}, Exec exec = Exec::Parallel);

/// Entity matches of one page, shared by the topic and annotation stages.
struct PageMatches {
  // node index -> matched entity indices (empty for stop values)
  std::vector<std::vector<KnowledgeBase::Index>> by_node;
  std::vector<KnowledgeBase::Index> page_set;  // sorted, unique
};

PageMatches match_page(const Page& page, const KnowledgeBase& kb, const StopValues& stop);

/// Scores keyed by entity index, sorted by index.
std::vector<std::pair<KnowledgeBase::Index, double>> score_page(const PageMatches& matches,
                                                                const KnowledgeBase& kb);

}  // namespace dsx

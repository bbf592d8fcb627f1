#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dsx/dom.hpp"
#include "dsx/kb.hpp"
#include "dsx/parallel.hpp"
#include "dsx/topic.hpp"

namespace dsx {

/// Reserved predicate labelling the node that carries the topic entity's name.
inline constexpr std::string_view kNamePredicate = "name";

struct Annotation {
  std::string page_id;
  XPath xpath;
  std::string predicate;
  std::string object_text;
  std::optional<EntityId> object_entity;

  auto operator<=>(const Annotation&) const = default;
};

struct MentionKey {
  std::string predicate;
  ObjectRef object;

  auto operator<=>(const MentionKey&) const = default;
};

/// Every (predicate, object) of the topic entity that appears on the page,
/// with the paths of all nodes whose text matches the object (document order).
std::map<MentionKey, std::vector<XPath>> object_mentions(const Page& page, const TopicAssignment& topic,
                                                         const KnowledgeBase& kb);

/// For each mention, climbs to the highest ancestor that holds no other
/// mention and counts the predicate's object paths beneath it. Returns the
/// mentions that reach the maximum count, in input order.
std::vector<XPath> best_local_mention(const Page& page, std::span<const XPath> mentions,
                                      std::span<const XPath> predicate_object_xpaths);

struct XPathClustering {
  std::vector<std::size_t> label;  // per input xpath
  std::vector<std::size_t> size;   // per cluster, counted over the input (with repeats)
  std::size_t count() const { return size.size(); }
};

/// Single-linkage agglomerative clustering under xpath_distance. Identical
/// paths collapse first; merging stops at `k` clusters (or the number of
/// distinct paths if smaller). Ties merge in lexicographic pair order.
XPathClustering cluster_object_xpaths(std::span<const XPath> xpaths, std::size_t k,
                                      Exec exec = Exec::Parallel);

enum class AnnotationMode : std::uint8_t {
  Full,       // local evidence plus global clustering
  TopicOnly,  // every mention of every object, no disambiguation
};

struct AnnotateParams {
  int min_annotations = 3;                // relation annotations a page needs to be kept
  double duplicate_page_fraction = 0.5;   // value share that flags a predicate as duplicated
  AnnotationMode mode = AnnotationMode::Full;
};

struct AnnotationResult {
  std::vector<Annotation> annotations;  // admitted pages only, sorted
  std::set<std::string> admitted_pages;
  std::set<std::string> duplicated_predicates;
};

AnnotationResult annotate_site(std::span<const Page> pages, const TopicMap& topics, const KnowledgeBase& kb,
                               const AnnotateParams& params = {}, Exec exec = Exec::Parallel);

}  // namespace dsx

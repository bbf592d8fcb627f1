#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "dsx/annotate.hpp"
#include "dsx/extract.hpp"
#include "dsx/topic.hpp"

namespace dsx {

struct Metrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::optional<double> precision;  // none when nothing was predicted
  std::optional<double> recall;     // none when there is no gold
  std::optional<double> f1;

  static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
  nlohmann::json to_json() const;
};

/// Matches on (page_id, predicate, normalized subject, normalized object).
Metrics triple_metrics(std::span<const ExtractedTriple> extracted, std::span<const ExtractedTriple> gold);

/// Per predicate: a (page, predicate) with a prediction is a hit when the most
/// confident prediction's object is among the gold objects; pages with gold
/// and no prediction are misses; pages with neither are not counted.
std::map<std::string, Metrics> page_hit_metrics(std::span<const ExtractedTriple> extracted,
                                                std::span<const ExtractedTriple> gold);

/// Matches on (page_id, xpath, predicate). Name annotations are ignored on both sides.
Metrics annotation_metrics(std::span<const Annotation> annotations, std::span<const Annotation> gold);

/// An assignment is correct when its entity equals the gold entity of the page.
Metrics topic_metrics(const TopicMap& topics, std::span<const TopicAssignment> gold);

}  // namespace dsx

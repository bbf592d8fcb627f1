#include "dsx/metrics.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <tuple>

#include "dsx/text.hpp"

namespace dsx {
namespace {

using TripleKey = std::tuple<std::string, std::string, std::string, std::string>;

TripleKey key_of(const ExtractedTriple& t) {
  return {t.page_id, t.predicate, normalize_surface(t.subject), normalize_surface(t.object)};
}

template <typename K>
Metrics compare_sets(const std::set<K>& predicted, const std::set<K>& gold) {
  std::size_t tp = 0;
  for (const K& k : predicted) tp += gold.count(k);
  return Metrics::from_counts(tp, predicted.size() - tp, gold.size() - tp);
}

}  // namespace

Metrics Metrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Metrics m{tp, fp, fn, std::nullopt, std::nullopt, std::nullopt};
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tp == 0) {
    if (tp + fp + fn > 0) m.f1 = 0.0;
  } else {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

nlohmann::json Metrics::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"precision", opt(precision)}, {"recall", opt(recall)}, {"f1", opt(f1)}};
}

Metrics triple_metrics(std::span<const ExtractedTriple> extracted, std::span<const ExtractedTriple> gold) {
  std::set<TripleKey> e, g;
  for (const auto& t : extracted) e.insert(key_of(t));
  for (const auto& t : gold) g.insert(key_of(t));
  return compare_sets(e, g);
}

std::map<std::string, Metrics> page_hit_metrics(std::span<const ExtractedTriple> extracted,
                                                std::span<const ExtractedTriple> gold) {
  using PageKey = std::pair<std::string, std::string>;  // predicate, page
  std::map<PageKey, std::set<std::string>> gold_objects;
  for (const auto& t : gold) gold_objects[{t.predicate, t.page_id}].insert(normalize_surface(t.object));
  std::map<PageKey, const ExtractedTriple*> best;
  for (const auto& t : extracted) {
    auto [it, fresh] = best.try_emplace({t.predicate, t.page_id}, &t);
    if (!fresh && t.confidence > it->second->confidence) it->second = &t;
  }
  std::map<std::string, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (const auto& [key, t] : best) {
    auto g = gold_objects.find(key);
    const bool hit = g != gold_objects.end() && g->second.count(normalize_surface(t->object)) > 0;
    ++counts[key.first][hit ? 0 : 1];
    if (!hit && g != gold_objects.end()) ++counts[key.first][2];
  }
  for (const auto& [key, objs] : gold_objects)
    if (!best.count(key)) ++counts[key.first][2];
  std::map<std::string, Metrics> out;
  for (const auto& [pred, c] : counts) out[pred] = Metrics::from_counts(c[0], c[1], c[2]);
  return out;
}

Metrics annotation_metrics(std::span<const Annotation> annotations, std::span<const Annotation> gold) {
  using Key = std::tuple<std::string, XPath, std::string>;
  std::set<Key> a, g;
  for (const auto& x : annotations)
    if (x.predicate != kNamePredicate) a.insert({x.page_id, x.xpath, x.predicate});
  for (const auto& x : gold)
    if (x.predicate != kNamePredicate) g.insert({x.page_id, x.xpath, x.predicate});
  return compare_sets(a, g);
}

Metrics topic_metrics(const TopicMap& topics, std::span<const TopicAssignment> gold) {
  std::map<std::string, EntityId> truth;
  for (const auto& t : gold) truth[t.page_id] = t.entity;
  std::size_t tp = 0, fp = 0;
  for (const auto& [page, t] : topics) {
    auto it = truth.find(page);
    if (it != truth.end() && it->second == t.entity)
      ++tp;
    else
      ++fp;
  }
  return Metrics::from_counts(tp, fp, truth.size() - tp);
}

}  // namespace dsx

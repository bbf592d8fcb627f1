#include "dsx/extract.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>

#include "dsx/annotate.hpp"
#include "dsx/text.hpp"

namespace dsx {

std::vector<NodePrediction> classify_page(const Model& model, const Page& page, const FrequentStrings& freq) {
  const auto name_it = std::find(model.classes.begin(), model.classes.end(), kNamePredicate);
  const std::size_t name_class = static_cast<std::size_t>(name_it - model.classes.begin());
  std::vector<NodePrediction> out;
  for (std::size_t n : page.text_nodes()) {
    const auto p = model.predict_proba(vectorize(node_features(page, n, freq), model.vocab));
    NodePrediction pred;
    pred.node = n;
    pred.top_class = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    pred.top_prob = p[pred.top_class];
    pred.name_prob = name_class < model.classes.size() ? p[name_class] : 0.0;
    out.push_back(pred);
  }
  return out;
}

std::vector<ExtractedTriple> select_extractions(const Model& model, const Page& page,
                                                std::span<const NodePrediction> predictions, double threshold,
                                                ExtractMode mode) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in [0, 1]");
  std::optional<NodePrediction> subject;
  for (const auto& p : predictions)
    if (p.name_prob >= threshold && p.name_prob > 0.0 && (!subject || p.name_prob > subject->name_prob)) subject = p;
  if (!subject) return {};
  const std::string& subject_text = page.node(subject->node).text;

  // (predicate, normalized object) -> best prediction so far
  std::map<std::pair<std::size_t, std::string>, const NodePrediction*> best;
  for (const auto& p : predictions) {
    if (p.node == subject->node || p.top_class >= model.classes.size()) continue;
    if (model.classes[p.top_class] == kNamePredicate || p.top_prob < threshold) continue;
    const auto key = mode == ExtractMode::PageHit ? std::make_pair(p.top_class, std::string())
                                                  : std::make_pair(p.top_class, page.node(p.node).norm);
    auto [it, inserted] = best.emplace(key, &p);
    if (!inserted && p.top_prob > it->second->top_prob) it->second = &p;
  }

  std::vector<const NodePrediction*> kept;
  for (const auto& [_, p] : best) kept.push_back(p);
  std::sort(kept.begin(), kept.end(), [](const NodePrediction* a, const NodePrediction* b) {
    return std::tie(a->node, a->top_class) < std::tie(b->node, b->top_class);
  });
  std::vector<ExtractedTriple> out;
  for (const NodePrediction* p : kept) {
    const DomNode& node = page.node(p->node);
    out.push_back({page.page_id(), subject_text, model.classes[p->top_class], node.text, p->top_prob, node.xpath});
  }
  return out;
}

std::vector<ExtractedTriple> extract_page(const Model& model, const Page& page, const FrequentStrings& freq,
                                          double threshold, ExtractMode mode) {
  const auto predictions = classify_page(model, page, freq);
  return select_extractions(model, page, predictions, threshold, mode);
}

std::vector<ExtractedTriple> extract_site(const Model& model, std::span<const Page> pages, double threshold,
                                          ExtractMode mode, Exec exec) {
  std::vector<std::vector<ExtractedTriple>> per_page(pages.size());
  parallel_for(exec, pages.size(),
               [&](std::size_t i) { per_page[i] = extract_page(model, pages[i], model.frequent, threshold, mode); });
  std::vector<ExtractedTriple> out;
  for (auto& v : per_page) out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  return out;
}

}  // namespace dsx

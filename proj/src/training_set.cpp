#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "dsx/model.hpp"

namespace dsx {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Uniform integer in [0, bound) without relying on library distributions,
// whose algorithms differ between standard library implementations.
std::size_t bounded(std::mt19937_64& rng, std::size_t bound) {
  const std::uint64_t b = bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % b);
}

struct PagePlan {
  std::size_t page = 0;
  std::vector<std::pair<std::size_t, std::string>> positives;  // node, label
  std::vector<std::size_t> negatives;
  std::vector<FeatureSet> features;  // positives then negatives
};

}  // namespace

std::vector<std::size_t> list_sibling_exclusions(const Page& page, std::span<const std::size_t> positives,
                                                 std::span<const std::string> predicates) {
  std::map<std::pair<std::string, std::vector<std::string>>, std::vector<std::size_t>> groups;
  for (std::size_t p = 0; p < positives.size(); ++p) {
    const auto& steps = page.node(positives[p]).xpath.steps();
    std::vector<std::string> tags;
    for (const auto& s : steps) tags.push_back(s.tag);
    auto& g = groups[{predicates[p], std::move(tags)}];
    if (std::find(g.begin(), g.end(), positives[p]) == g.end()) g.push_back(positives[p]);
  }

  std::vector<std::size_t> out;
  for (const auto& [key, members] : groups) {
    if (members.size() < 2) continue;
    const auto& ref = page.node(members.front()).xpath.steps();
    std::vector<bool> varies(ref.size(), false);
    for (std::size_t m : members) {
      const auto& steps = page.node(m).xpath.steps();
      for (std::size_t s = 0; s < steps.size(); ++s)
        if (steps[s].index != ref[s].index) varies[s] = true;
    }
    for (std::size_t n = 0; n < page.size(); ++n) {
      const auto& steps = page.node(n).xpath.steps();
      if (steps.size() != ref.size()) continue;
      bool same = true;
      for (std::size_t s = 0; s < steps.size() && same; ++s)
        same = steps[s].tag == ref[s].tag && (varies[s] || steps[s].index == ref[s].index);
      if (same && std::find(positives.begin(), positives.end(), n) == positives.end()) out.push_back(n);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TrainingSet assemble_training_set(std::span<const Annotation> annotations, std::span<const Page> pages,
                                  const TopicMap& topics, const FrequentStrings& freq,
                                  const TrainParams& params, Exec exec) {
  if (params.r < 1) throw std::invalid_argument("r must be at least 1");
  std::map<std::string, std::size_t> page_pos;
  for (std::size_t i = 0; i < pages.size(); ++i) page_pos.emplace(pages[i].page_id(), i);

  std::map<std::string, PagePlan> plans;
  for (const auto& a : annotations) {
    auto it = page_pos.find(a.page_id);
    if (it == page_pos.end()) throw std::invalid_argument("annotation for unknown page " + a.page_id);
    const Page& page = pages[it->second];
    auto node = page.find(a.xpath);
    if (!node) throw std::invalid_argument("annotation xpath not on page " + a.page_id + ": " + a.xpath.str());
    PagePlan& plan = plans[a.page_id];
    plan.page = it->second;
    plan.positives.emplace_back(*node, a.predicate);
  }
  for (auto& [page_id, plan] : plans) {
    auto t = topics.find(page_id);
    if (t == topics.end()) continue;
    const bool has_name = std::any_of(plan.positives.begin(), plan.positives.end(),
                                      [](const auto& p) { return p.second == kNamePredicate; });
    if (has_name) continue;
    if (auto anchor = pages[plan.page].find(t->second.anchor_xpath))
      plan.positives.emplace_back(*anchor, std::string(kNamePredicate));
  }

  std::vector<PagePlan*> ordered;
  for (auto& [_, plan] : plans) ordered.push_back(&plan);

  parallel_for(exec, ordered.size(), [&](std::size_t w) {
    PagePlan& plan = *ordered[w];
    const Page& page = pages[plan.page];
    std::vector<std::size_t> pos_nodes;
    std::vector<std::string> pos_labels;
    for (const auto& [n, label] : plan.positives) {
      pos_nodes.push_back(n);
      pos_labels.push_back(label);
    }
    const auto excluded = list_sibling_exclusions(page, pos_nodes, pos_labels);
    std::vector<std::size_t> eligible;
    for (std::size_t n : page.text_nodes()) {
      if (std::find(pos_nodes.begin(), pos_nodes.end(), n) != pos_nodes.end()) continue;
      if (std::binary_search(excluded.begin(), excluded.end(), n)) continue;
      eligible.push_back(n);
    }
    const std::size_t want = std::min(eligible.size(), static_cast<std::size_t>(params.r) * pos_nodes.size());
    std::mt19937_64 rng(params.seed ^ fnv1a(page.page_id()));
    for (std::size_t k = 0; k < want; ++k) std::swap(eligible[k], eligible[k + bounded(rng, eligible.size() - k)]);
    plan.negatives.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(want));
    std::sort(plan.negatives.begin(), plan.negatives.end());

    for (std::size_t n : pos_nodes) plan.features.push_back(node_features(page, n, freq));
    for (std::size_t n : plan.negatives) plan.features.push_back(node_features(page, n, freq));
  });

  std::set<std::string> keys;
  for (const PagePlan* plan : ordered)
    for (const auto& fs : plan->features)
      for (const auto& f : fs) keys.insert(feature_key(f));

  TrainingSet out;
  out.vocab = FeatureVocabulary(std::vector<std::string>(keys.begin(), keys.end()));
  for (const PagePlan* plan : ordered) {
    const Page& page = pages[plan->page];
    std::size_t f = 0;
    for (const auto& [n, label] : plan->positives)
      out.examples.push_back({page.page_id(), page.node(n).xpath, label, vectorize(plan->features[f++], out.vocab)});
    for (std::size_t n : plan->negatives)
      out.examples.push_back(
          {page.page_id(), page.node(n).xpath, std::string(kOtherClass), vectorize(plan->features[f++], out.vocab)});
  }
  return out;
}

}  // namespace dsx

#include <doctest.h>

#include <algorithm>
#include <random>

#include "dsx/synth.hpp"
#include "dsx/text.hpp"
#include "dsx/topic.hpp"
#include "helpers.hpp"

using namespace dsx;
using testing::ent;
using testing::page_of;
using testing::to_entity;
using testing::to_literal;

namespace {

std::string paragraphs(const std::vector<std::string>& texts) {
  std::string body;
  for (const auto& t : texts) body += "<p>" + t + "</p>";
  return body;
}

// Jaccard over entity id sets, computed directly from the KB queries.
EntityScores oracle_scores(const Page& page, const KnowledgeBase& kb, const StopValues& stop) {
  std::set<EntityId> page_set;
  for (const auto& n : page.nodes()) {
    if (n.text.empty() || stop.contains(normalize_surface(n.text))) continue;
    const auto ids = kb.match_text(n.text);
    page_set.insert(ids.begin(), ids.end());
  }
  EntityScores out;
  for (const auto& e : page_set) {
    std::set<EntityId> objects;
    for (const auto& s : kb.entity_object_set(e)) {
      const auto ids = kb.match_text(s);
      objects.insert(ids.begin(), ids.end());
    }
    std::size_t common = 0;
    for (const auto& o : objects) common += page_set.contains(o);
    const std::size_t uni = page_set.size() + objects.size() - common;
    out[e] = uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
  }
  return out;
}

// 20 film pages that all carry Help, Contact and FAQ links; Help's only
// objects are Contact and FAQ, while each film's director is off-page.
std::pair<KnowledgeBase, std::vector<Page>> help_site() {
  std::vector<Entity> es{ent("help", "Help"), ent("contact", "Contact Us"), ent("faq", "FAQ")};
  std::vector<Triple> ts{to_entity("help", "links", "contact"), to_entity("help", "links", "faq")};
  std::vector<Page> pages;
  for (int i = 0; i < 20; ++i) {
    const auto n = std::to_string(i);
    es.push_back(ent("f" + n, "Film Number " + n));
    es.push_back(ent("d" + n, "Director Number " + n));
    ts.push_back(to_entity("f" + n, "director", "d" + n));
    pages.push_back(page_of("<h1>Film Number " + n + "</h1><ul><li>Help</li><li>Contact Us</li><li>FAQ</li></ul>",
                            "page-" + n));
  }
  return {KnowledgeBase(es, ts), std::move(pages)};
}

}  // namespace

TEST_SUITE("topic") {
  TEST_CASE("score_entities examples") {
    const KnowledgeBase kb({ent("a", "Alpha"), ent("b", "Beta"), ent("c", "Gamma"), ent("e", "Epsilon"),
                            ent("z", "Zeta")},
                           {to_entity("a", "rel", "b"), to_entity("a", "rel", "c"), to_entity("a", "rel", "e"),
                            to_entity("z", "rel", "b"), to_entity("z", "rel", "c"), to_entity("z", "rel", "a")});
    const StopValues none;

    // pageSet {a,b,c}; entitySet(a) = {b,c,e}: 2 / 4.
    const auto scores = score_entities(page_of(paragraphs({"Alpha", "Beta", "Gamma"})), kb, none);
    CHECK(scores.at("a") == doctest::Approx(0.5));
    CHECK(scores.at("b") == 0.0);
    CHECK_FALSE(scores.contains("z"));

    // pageSet equals entitySet(z).
    const auto full = score_entities(page_of(paragraphs({"Alpha", "Beta", "Gamma"})), kb, none);
    const auto zpage = score_entities(page_of(paragraphs({"Beta", "Gamma", "Alpha", "Zeta"})), kb, none);
    CHECK(zpage.at("z") == doctest::Approx(0.75));
    const auto exact = score_entities(page_of(paragraphs({"Beta", "Gamma", "Alpha"})), kb, none);
    CHECK(exact.size() == 3);
    CHECK(full == exact);
  }

  TEST_CASE("stop values are kept out of the page set") {
    const KnowledgeBase kb({ent("a", "Alpha"), ent("b", "Beta"), ent("y", "1989")},
                           {to_entity("a", "rel", "b"), to_entity("a", "year", "y")});
    StopValues stop;
    stop.values.insert("beta");
    const auto scores = score_entities(page_of(paragraphs({"Alpha", "Beta", "1989"})), kb, stop);
    CHECK_FALSE(scores.contains("b"));
    CHECK_FALSE(scores.contains("y"));
    // entitySet(a) = {b, y}, pageSet = {a}.
    CHECK(scores.at("a") == 0.0);
  }

  TEST_CASE("candidate_topic") {
    CHECK(candidate_topic({{"A", 0.4}, {"B", 0.7}}) == std::pair<EntityId, double>{"B", 0.7});
    CHECK(candidate_topic({{"A", 0.5}, {"B", 0.5}}) == std::pair<EntityId, double>{"A", 0.5});
    CHECK_FALSE(candidate_topic({}).has_value());
  }

  TEST_CASE("scores match a brute-force set computation") {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 20; ++round) {
      const std::size_t n = 20 + testing::below(rng, 40);
      std::vector<Entity> es;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> aliases;
        if (testing::below(rng, 5) == 0) aliases.push_back("Alias " + std::to_string(testing::below(rng, 10)));
        es.push_back(ent("e" + std::to_string(i), "Name " + std::to_string(testing::below(rng, n))));
        es.back().aliases = aliases;
      }
      std::vector<Triple> ts;
      for (std::size_t t = 0; t < 5 * n; ++t) {
        const auto& s = es[testing::below(rng, n)].id;
        if (testing::below(rng, 4) == 0)
          ts.push_back(to_literal(s, "lit", std::to_string(1900 + testing::below(rng, 30))));
        else
          ts.push_back(to_entity(s, "rel", es[testing::below(rng, n)].id));
      }
      const KnowledgeBase kb(es, ts);
      StopOptions opts;
      opts.min_count = 3;
      const auto stop = build_stop_values(kb, 0.01, opts);
      for (int p = 0; p < 10; ++p) {
        std::vector<std::string> texts;
        for (std::size_t k = 1 + testing::below(rng, 15); k > 0; --k)
          texts.push_back(testing::below(rng, 6) == 0 ? "Alias " + std::to_string(testing::below(rng, 10))
                                                      : "Name " + std::to_string(testing::below(rng, n)));
        const Page page = page_of(paragraphs(texts));
        const auto got = score_entities(page, kb, stop);
        const auto want = oracle_scores(page, kb, stop);
        REQUIRE(got.size() == want.size());
        for (const auto& [e, s] : want) {
          CHECK(got.at(e) == doctest::Approx(s).epsilon(1e-12));
          CHECK(s >= 0.0);
          CHECK(s <= 1.0);
        }
      }
    }
  }

  TEST_CASE("non-unique candidates are discarded") {
    const auto [kb, pages] = help_site();
    const StopValues none;
    for (const auto& p : pages) CHECK(candidate_topic(score_entities(p, kb, none))->first == "help");

    const auto strict = assign_topics(pages, kb, none, TopicParams{5});
    for (const auto& [_, t] : strict) CHECK(t.entity != "help");
    CHECK(strict.empty());

    const auto lax = assign_topics(pages, kb, none, TopicParams{21});
    CHECK(lax.size() == 20);
    for (const auto& [_, t] : lax) CHECK(t.entity == "help");
  }

  TEST_CASE("planted h1 topics are recovered") {
    SynthSpec spec;
    spec.n_pages = 50;
    spec.kb_coverage = 1.0;
    const auto corpus = generate_corpus(spec);
    const auto kb = corpus.kb();
    const auto pages = corpus.parse_pages();
    const auto stop = build_stop_values(kb, 0.0001);
    const auto topics = assign_topics(pages, kb, stop);
    REQUIRE(topics.size() == 50);
    for (const auto& gold : corpus.gold_topics) {
      const auto& t = topics.at(gold.page_id);
      CHECK(t.entity == gold.entity);
      CHECK(t.anchor_xpath == gold.anchor_xpath);
    }
  }

  TEST_CASE("assignment invariants, determinism and serial/parallel agreement") {
    SynthSpec spec;
    spec.n_pages = 60;
    spec.recommendation_blocks = true;
    spec.duplicated_values = true;
    spec.seed = 9;
    const auto corpus = generate_corpus(spec);
    const auto kb = corpus.kb();
    const auto pages = corpus.parse_pages();
    const auto stop = build_stop_values(kb, 0.0001);
    const TopicParams params;

    std::map<EntityId, int> candidacy;
    for (const auto& p : pages)
      if (auto c = candidate_topic(score_entities(p, kb, stop))) ++candidacy[c->first];

    const auto topics = assign_topics(pages, kb, stop, params, Exec::Parallel);
    CHECK(topics == assign_topics(pages, kb, stop, params, Exec::Serial));
    CHECK(topics == assign_topics(pages, kb, stop, params, Exec::Parallel));
    for (const auto& [id, t] : topics) {
      const auto it = std::find_if(pages.begin(), pages.end(), [&](const Page& p) { return p.page_id() == id; });
      REQUIRE(it != pages.end());
      const auto node = it->find(t.anchor_xpath);
      REQUIRE(node.has_value());
      CHECK(kb.match_text(it->node(*node).text).contains(t.entity));
      CHECK(t.score > 0.0);
      CHECK(candidacy[t.entity] < params.uniqueness_max);
    }
  }

  TEST_CASE("pages without a ranked match get no assignment") {
    const KnowledgeBase kb({ent("f", "Known Film"), ent("g", "Other Film"), ent("p", "Some Person")},
                           {to_entity("f", "director", "p"), to_entity("g", "director", "p")});
    const std::vector<Page> pages{page_of("<h1>Known Film</h1><p>Some Person</p>", "a"),
                                  page_of("<h1>Other Film</h1><p>Some Person</p>", "b"),
                                  page_of("<div><span>Unknown Film</span></div>", "c")};
    const auto topics = assign_topics(pages, kb, StopValues{});
    CHECK(topics.size() == 2);
    CHECK(topics.at("a").entity == "f");
    CHECK(topics.at("b").entity == "g");
    CHECK_FALSE(topics.contains("c"));
  }
}

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "dsx/kb.hpp"
#include "dsx/text.hpp"
#include "helpers.hpp"

using namespace dsx;
using testing::ent;
using testing::to_entity;
using testing::to_literal;

namespace {

KnowledgeBase film_kb(MatchMode mode = MatchMode::Exact) {
  return KnowledgeBase({ent("f1", "Do the Right Thing"), ent("p1", "Spike Lee", {"S. Lee"}),
                        ent("p2", "Danny Aiello"), ent("g1", "Drama")},
                       {to_entity("f1", "director", "p1"), to_entity("f1", "cast", "p2"),
                        to_literal("f1", "release_year", "1989"), to_entity("f1", "genre", "g1")},
                       mode);
}

std::string random_text(std::mt19937_64& rng) {
  static const std::string alphabet = "abcAB C.,!-  \t\n9";
  std::string s;
  for (std::size_t n = testing::below(rng, 16); n > 0; --n) s += alphabet[testing::below(rng, alphabet.size())];
  return s;
}

}  // namespace

TEST_SUITE("kb") {
  TEST_CASE("normalize_surface examples") {
    CHECK(normalize_surface("  Do   the Right Thing ") == "do the right thing");
    CHECK(normalize_surface("SPIKE LEE") == "spike lee");
    CHECK(normalize_surface("") == "");
    CHECK(normalize_surface("Director:") == "director");
    CHECK(normalize_surface("\"Quoted,\"") == "quoted");
    CHECK(normalize_surface("S. Lee") == "s. lee");
  }

  TEST_CASE("normalize_surface is idempotent") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
      const auto t = random_text(rng);
      const auto once = normalize_surface(t);
      CHECK(normalize_surface(once) == once);
    }
  }

  TEST_CASE("load of empty streams gives an empty KB") {
    std::istringstream e, t;
    const auto kb = KnowledgeBase::load(e, t);
    CHECK(kb.entity_count() == 0);
    CHECK(kb.triples().empty());
  }

  TEST_CASE("save/load round trip") {
    const KnowledgeBase kb({ent("a", "Alpha", {"A1"}), ent("b", "Beta"), ent("c", "Gamma \"G\"")},
                           {to_entity("a", "knows", "b"), to_literal("a", "year", "1999"),
                            to_entity("b", "knows", "c"), to_literal("c", "note", "line\nbreak")});
    std::ostringstream e, t;
    kb.save(e, t);
    std::istringstream ei(e.str()), ti(t.str());
    const auto back = KnowledgeBase::load(ei, ti);
    CHECK(std::equal(kb.entities().begin(), kb.entities().end(), back.entities().begin(), back.entities().end()));
    CHECK(std::equal(kb.triples().begin(), kb.triples().end(), back.triples().begin(), back.triples().end()));
  }

  TEST_CASE("load errors name the offending id or line") {
    SUBCASE("unknown subject") {
      std::istringstream e(R"({"id":"a","name":"A","aliases":[]})" "\n");
      std::istringstream t(R"({"subject":"zz","predicate":"p","object":{"literal":"x"}})" "\n");
      CHECK_THROWS_WITH_AS(KnowledgeBase::load(e, t), doctest::Contains("'zz'"), KbError);
    }
    SUBCASE("duplicate id") {
      std::istringstream e(R"({"id":"a","name":"A"})" "\n" R"({"id":"a","name":"B"})" "\n");
      std::istringstream t;
      CHECK_THROWS_WITH_AS(KnowledgeBase::load(e, t), doctest::Contains("duplicate entity id 'a'"), KbError);
    }
    SUBCASE("malformed line") {
      std::istringstream e(R"({"id":"a","name":"A"})" "\n\n{not json\n");
      std::istringstream t;
      CHECK_THROWS_WITH_AS(KnowledgeBase::load(e, t), doctest::Contains("line 3"), KbError);
    }
  }

  TEST_CASE("match_text exact, homonyms, and fuzzy") {
    const auto kb = film_kb();
    CHECK(kb.match_text("do the right thing") == std::set<EntityId>{"f1"});
    CHECK(kb.match_text("  S. LEE ") == std::set<EntityId>{"p1"});
    CHECK(kb.match_text("Do the Rigt Thing").empty());
    CHECK(film_kb(MatchMode::Fuzzy).match_text("Do the Rigt Thing") == std::set<EntityId>{"f1"});
    // Short strings never match fuzzily.
    CHECK(film_kb(MatchMode::Fuzzy).match_text("Drma").empty());

    std::vector<Entity> episodes;
    for (int i = 0; i < 2000; ++i) episodes.push_back(ent("ep" + std::to_string(i), "Pilot"));
    const KnowledgeBase many(episodes, {});
    CHECK(many.match_text("Pilot").size() == 2000);
  }

  TEST_CASE("fuzzy matching agrees with a brute-force edit distance scan") {
    std::mt19937_64 rng(11);
    const std::string letters = "abcde";
    auto word = [&](std::size_t lo, std::size_t hi) {
      std::string w;
      for (std::size_t n = lo + testing::below(rng, hi - lo + 1); n > 0; --n) w += letters[testing::below(rng, 5)];
      return w;
    };
    std::vector<Entity> es;
    for (int i = 0; i < 300; ++i) es.push_back(ent("e" + std::to_string(i), word(7, 12)));
    const KnowledgeBase exact(es, {}, MatchMode::Exact);
    const KnowledgeBase fuzzy(es, {}, MatchMode::Fuzzy);
    for (int q = 0; q < 500; ++q) {
      const std::string query = word(7, 12);
      std::set<EntityId> want_exact, want_fuzzy;
      for (const auto& e : es) {
        const auto s = normalize_surface(e.canonical_name);
        if (s == query) want_exact.insert(e.id);
        const bool near = s.size() >= kFuzzyMinLength && query.size() >= kFuzzyMinLength && levenshtein(s, query) <= 1;
        if (s == query || near) want_fuzzy.insert(e.id);
      }
      CHECK(exact.match_text(query) == want_exact);
      CHECK(fuzzy.match_text(query) == want_fuzzy);
    }
  }

  TEST_CASE("stop values") {
    SUBCASE("fraction threshold on a large KB") {
      // 60000 triples; "shared" on 12 (0.02%), "rare" on 3 (0.005%).
      std::vector<Entity> es{ent("s", "Subject")};
      std::vector<Triple> ts;
      for (int i = 0; i < 60000; ++i) {
        std::string obj = i < 12 ? "shared" : (i < 15 ? "rare" : "v" + std::to_string(i));
        ts.push_back(to_literal("s", "p", obj));
      }
      const KnowledgeBase kb(es, ts);
      const auto stop = build_stop_values(kb, 0.0001);
      CHECK(stop.contains("shared"));
      CHECK_FALSE(stop.contains("rare"));
      CHECK_FALSE(stop.contains("v100"));
    }
    SUBCASE("low-information strings") {
      const auto kb = film_kb();
      StopOptions opts;
      opts.countries = {"France", "United States"};
      const auto stop = build_stop_values(kb, 0.0001, opts);
      CHECK(stop.contains("7"));
      CHECK(stop.contains("1989"));
      CHECK_FALSE(stop.contains("0999"));
      CHECK_FALSE(stop.contains("2500"));
      CHECK(stop.contains("france"));
      CHECK(stop.contains("united states"));
      CHECK_FALSE(stop.contains("do the right thing"));
      CHECK_FALSE(stop.contains("spike lee"));
    }
    SUBCASE("fraction must lie in (0, 1]") {
      const auto kb = film_kb();
      CHECK_THROWS_AS(build_stop_values(kb, 0.0), std::invalid_argument);
      CHECK_THROWS_AS(build_stop_values(kb, 1.5), std::invalid_argument);
    }
    SUBCASE("monotone in the fraction") {
      std::mt19937_64 rng(3);
      std::vector<Entity> es{ent("s", "S")};
      std::vector<Triple> ts;
      for (int i = 0; i < 5000; ++i) ts.push_back(to_literal("s", "p", "x" + std::to_string(testing::below(rng, 200))));
      const KnowledgeBase kb(es, ts);
      StopOptions opts;
      opts.min_count = 1;
      const double fractions[] = {0.001, 0.003, 0.005, 0.008, 0.02};
      for (std::size_t i = 0; i + 1 < std::size(fractions); ++i) {
        const auto lo = build_stop_values(kb, fractions[i], opts);
        const auto hi = build_stop_values(kb, fractions[i + 1], opts);
        for (const auto& v : hi.values) CHECK(lo.values.contains(v));
      }
    }
  }

  TEST_CASE("entity_object_set") {
    const auto kb = film_kb();
    CHECK(kb.entity_object_set("p2").empty());
    const KnowledgeBase small({ent("f", "Film", {"The Film"}), ent("p", "Spike Lee", {"S. Lee"})},
                              {to_entity("f", "director", "p"), to_literal("f", "year", "1989"),
                               to_entity("f", "writer", "p")});
    CHECK(small.entity_object_set("f") == std::set<std::string>{"spike lee", "s. lee", "1989"});
    CHECK_FALSE(small.entity_object_set("f").contains("the film"));
    CHECK_THROWS_AS(small.entity_object_set("nope"), KbError);
  }

  TEST_CASE("entity_object_set equals a full triple scan on random KBs") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 5; ++round) {
      std::vector<Entity> es;
      const std::size_t n = 50 + testing::below(rng, 500);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> aliases;
        if (testing::below(rng, 4) == 0) aliases.push_back("Alias " + std::to_string(testing::below(rng, 50)));
        es.push_back(ent("e" + std::to_string(i), "Name " + std::to_string(testing::below(rng, n)), aliases));
      }
      std::vector<Triple> ts;
      for (std::size_t t = 0; t < 10000; ++t) {
        const auto s = es[testing::below(rng, n)].id;
        if (testing::below(rng, 3) == 0)
          ts.push_back(to_literal(s, "lit", "Value " + std::to_string(testing::below(rng, 300))));
        else
          ts.push_back(to_entity(s, "rel", es[testing::below(rng, n)].id));
      }
      const KnowledgeBase kb(es, ts);
      std::map<std::string, const Entity*> by_id;
      for (const auto& e : es) by_id[e.id] = &e;
      for (std::size_t probe = 0; probe < 50; ++probe) {
        const auto& id = es[testing::below(rng, n)].id;
        std::set<std::string> want;
        for (const auto& t : ts) {
          if (t.subject != id) continue;
          if (t.object.is_entity()) {
            const Entity* o = by_id.at(t.object.value);
            want.insert(normalize_surface(o->canonical_name));
            for (const auto& a : o->aliases) want.insert(normalize_surface(a));
          } else {
            want.insert(normalize_surface(t.object.value));
          }
        }
        CHECK(kb.entity_object_set(id) == want);
      }
    }
  }
}

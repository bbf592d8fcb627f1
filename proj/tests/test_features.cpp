#include <doctest.h>

#include <map>
#include <set>

#include <random>

#include "dsx/features.hpp"
#include "dsx/synth.hpp"
#include "helpers.hpp"

using namespace dsx;
using testing::page_of;

namespace {

std::size_t node_at(const Page& p, std::string_view path) {
  auto n = p.find(path);
  REQUIRE_MESSAGE(n.has_value(), "missing " << path);
  return *n;
}

std::size_t text_feature_count(const FeatureSet& fs) {
  return static_cast<std::size_t>(
      std::count_if(fs.begin(), fs.end(), [](const Feature& f) { return std::holds_alternative<TextFeature>(f); }));
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("feature keys round trip") {
    std::mt19937_64 rng(4);
    const std::string alphabet = "ab|\\. /-";
    auto word = [&] {
      std::string w;
      for (std::size_t n = testing::below(rng, 8); n > 0; --n) w += alphabet[testing::below(rng, alphabet.size())];
      return w;
    };
    std::set<std::string> keys;
    std::set<Feature> features;
    for (int i = 0; i < 2000; ++i) {
      Feature f = testing::below(rng, 2) == 0
                      ? Feature{StructuralFeature{word(), word(), static_cast<int>(testing::below(rng, 30)),
                                                  static_cast<int>(testing::below(rng, 11)) - 5}}
                      : Feature{TextFeature{word(), word()}};
      CHECK(parse_feature_key(feature_key(f)) == f);
      features.insert(f);
      keys.insert(feature_key(f));
    }
    CHECK(keys.size() == features.size());
    CHECK_THROWS_AS(parse_feature_key("Q|x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_feature_key("S|a|b|x|0"), std::invalid_argument);
  }

  TEST_CASE("frequent_strings") {
    SynthSpec spec;
    spec.n_pages = 50;
    const auto corpus = generate_corpus(spec);
    const auto pages = corpus.parse_pages();
    const auto freq = frequent_strings(pages, 0.1);
    CHECK(freq.contains("director"));
    CHECK(freq.contains("© 2024 moviebase"));
    // Independent page-count oracle.
    std::map<std::string, std::set<std::size_t>> seen_on;
    for (std::size_t i = 0; i < pages.size(); ++i)
      for (const auto& n : pages[i].nodes()) seen_on[n.norm].insert(i);
    std::set<std::string> expected;
    for (const auto& [s, on] : seen_on)
      if (!s.empty() && s.size() <= kFrequentStringMaxLength && on.size() >= 5) expected.insert(s);
    CHECK(std::set<std::string>(freq.begin(), freq.end()) == expected);
    const auto& title = corpus.gold_topics.front();
    const auto anchor = pages.front().find(title.anchor_xpath);
    REQUIRE(anchor);
    const auto& title_norm = pages.front().node(*anchor).norm;
    CHECK(freq.contains(title_norm) == (seen_on[title_norm].size() >= 5));
    for (const auto& s : freq) CHECK(s.size() <= kFrequentStringMaxLength);

    CHECK(frequent_strings({}, 0.1).empty());
    CHECK(frequent_strings(pages, 0.1, 30, Exec::Serial) == freq);
    CHECK_THROWS_AS(frequent_strings(pages, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(frequent_strings(pages, 1.5), std::invalid_argument);

    // Raising the fraction can only shrink the set.
    const auto strict = frequent_strings(pages, 0.9);
    for (const auto& s : strict) CHECK(freq.contains(s));
  }

  TEST_CASE("structural features") {
    const Page p = page_of(
        "<div class=cast><a>x</a></div><div class=main><p><span class=genre itemprop=genre>Drama</span></p></div>");
    const auto span = node_at(p, "/html[1]/body[1]/div[2]/p[1]/span[1]");
    const auto fs = node_features(p, span, {});
    CHECK(fs.contains(Feature{StructuralFeature{"class", "genre", 0, 0}}));
    CHECK(fs.contains(Feature{StructuralFeature{"itemprop", "genre", 0, 0}}));
    CHECK(fs.contains(Feature{StructuralFeature{"tag", "span", 0, 0}}));
    CHECK(fs.contains(Feature{StructuralFeature{"tag", "p", 1, 0}}));
    CHECK(fs.contains(Feature{StructuralFeature{"class", "main", 2, 0}}));
    CHECK(fs.contains(Feature{StructuralFeature{"class", "cast", 2, -1}}));
    CHECK(fs.contains(Feature{StructuralFeature{"tag", "head", 3, -1}}));
    CHECK(fs.contains(Feature{StructuralFeature{"tag", "html", 4, 0}}));
    CHECK_FALSE(fs.contains(Feature{StructuralFeature{"tag", "a", 0, 0}}));
    CHECK(text_feature_count(fs) == 0);
    for (const auto& f : fs) {
      const auto& s = std::get<StructuralFeature>(f);
      CHECK(std::abs(s.offset) <= kSiblingWidth);
      CHECK(std::find(std::begin(kKeptAttributes), std::end(kKeptAttributes), s.attr) != std::end(kKeptAttributes));
    }
  }

  TEST_CASE("sibling window is five wide") {
    std::string items;
    for (int i = 1; i <= 15; ++i) items += "<li class=c" + std::to_string(i) + ">v</li>";
    const Page p = page_of("<ul>" + items + "</ul>");
    const auto fs = node_features(p, node_at(p, "/html[1]/body[1]/ul[1]/li[8]"), {});
    for (int i = 1; i <= 15; ++i) {
      const bool inside = std::abs(i - 8) <= 5;
      CHECK(fs.contains(Feature{StructuralFeature{"class", "c" + std::to_string(i), 0, i - 8}}) == inside);
    }
  }

  TEST_CASE("text features") {
    const Page p = page_of(
        "<div class=row><span>Director:</span><a>Spike Lee</a></div>"
        "<div><div><div><div><div><b>Cast</b></div></div></div></div></div>");
    const FrequentStrings freq{"director", "cast", "spike lee"};
    const auto fs = node_features(p, node_at(p, "/html[1]/body[1]/div[1]/a[1]"), freq);
    CHECK(fs.contains(Feature{TextFeature{"director", "../span"}}));
    CHECK(fs.contains(Feature{TextFeature{"spike lee", "."}}));
    // The b node is seven edges away.
    CHECK_FALSE(std::any_of(fs.begin(), fs.end(), [](const Feature& f) {
      const auto* t = std::get_if<TextFeature>(&f);
      return t && t->text == "cast";
    }));
    CHECK(node_features(p, node_at(p, "/html[1]/body[1]/div[1]/a[1]"), freq) == fs);
  }

  TEST_CASE("feature count stays bounded on deep pages") {
    std::string open, close;
    for (int i = 0; i < 28; ++i) {
      open += "<div class=d" + std::to_string(i % 3) + "><span>s</span>";
      close += "</div>";
    }
    const Page p = page_of(open + "<em>leaf</em>" + close);
    const FrequentStrings freq{"s", "leaf"};
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p.node(i).depth > p.node(deepest).depth) deepest = i;
    const auto fs = node_features(p, deepest, freq);
    const auto depth = static_cast<std::size_t>(p.node(deepest).depth) + 1;
    CHECK(fs.size() - text_feature_count(fs) <= depth * (2 * kSiblingWidth + 1) * std::size(kKeptAttributes));
    CHECK(text_feature_count(fs) < 20);
  }

  TEST_CASE("vocabulary and vectorize") {
    const FeatureSet a{StructuralFeature{"tag", "a", 0, 0}, TextFeature{"director", "../span"}};
    const FeatureSet b{StructuralFeature{"tag", "a", 0, 0}, StructuralFeature{"class", "x", 1, 2}};

    FeatureVocabulary vocab;
    CHECK(vectorize({}, vocab, true).indices.empty());
    CHECK(vocab.size() == 0);
    const auto va = vectorize(a, vocab, true);
    CHECK(vocab.size() == 2);
    CHECK(vectorize(a, vocab, true) == va);
    CHECK(vocab.size() == 2);

    const FeatureVocabulary frozen = vocab;
    const auto vb = vectorize(b, frozen);
    CHECK(vb.indices.size() == 1);
    CHECK(frozen.size() == 2);
    CHECK(vectorize(b, vocab, false) == vb);
    CHECK(vocab.size() == 2);

    const auto vb_train = vectorize(b, vocab, true);
    CHECK(vocab.size() == 3);
    CHECK(std::is_sorted(vb_train.indices.begin(), vb_train.indices.end()));
    for (auto i : vb_train.indices) CHECK(i < vocab.size());

    CHECK_THROWS_AS(FeatureVocabulary({"k", "k"}), std::invalid_argument);
    const FeatureVocabulary ordered({"z", "a"});
    CHECK(ordered.find("z") == 0u);
    CHECK(ordered.find("a") == 1u);
    CHECK_FALSE(ordered.find("m").has_value());
  }
}

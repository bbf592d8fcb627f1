#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "dsx/dom.hpp"
#include "dsx/synth.hpp"
#include "dsx/xpath.hpp"
#include "helpers.hpp"

using namespace dsx;
using testing::page_of;

namespace {

std::string text_at(const Page& p, const std::string& path) {
  auto i = p.find(path);
  REQUIRE_MESSAGE(i.has_value(), "missing " << path);
  return p.node(*i).text;
}

XPath random_path(std::mt19937_64& rng) {
  static const char* tags[] = {"div", "span", "ul", "li"};
  std::vector<XPathStep> steps;
  for (std::size_t n = 1 + testing::below(rng, 6); n > 0; --n)
    steps.push_back({tags[testing::below(rng, 4)], 1 + static_cast<int>(testing::below(rng, 3))});
  return XPath(steps);
}

std::string person_page(int i) {
  std::string rows;
  for (int k = 0; k <= i; ++k) rows += "<tr><th>Film</th><td>Title " + std::to_string(k) + "</td></tr>";
  return "<html><body><section><header><h2>Person " + std::to_string(i) +
         "</h2></header><table>" + rows + "</table><aside><em>born</em></aside></section></body></html>";
}

}  // namespace

TEST_SUITE("dom") {
  TEST_CASE("parse_page basics") {
    const Page p = parse_page("<html><body><p>hi</p></body></html>", "x");
    CHECK(p.size() == 3);
    CHECK(text_at(p, "/html[1]/body[1]/p[1]") == "hi");
    CHECK(p.page_id() == "x");

    const Page two = page_of("<div>a</div><div>b</div>");
    CHECK(text_at(two, "/html[1]/body[1]/div[1]") == "a");
    CHECK(text_at(two, "/html[1]/body[1]/div[2]") == "b");
  }

  TEST_CASE("empty input is an error") {
    CHECK_THROWS_WITH_AS(parse_page("", "e"), "empty document", ParseError);
    CHECK_THROWS_AS(parse_page("   \n", "e"), ParseError);
  }

  TEST_CASE("script, style and comments are dropped; attributes filtered") {
    const Page p = page_of(
        "<script>var x = '<p>no</p>';</script><style>p{}</style><!-- <p>gone</p> -->"
        "<DIV Class='c' ID=i itemprop=director onclick='x()' data-x=1>Text &amp; more&nbsp;here</DIV>");
    for (const auto& n : p.nodes()) {
      CHECK(n.tag != "script");
      CHECK(n.tag != "style");
      for (const auto& [k, v] : n.attrs)
        CHECK(std::find(std::begin(kKeptAttributes), std::end(kKeptAttributes), k) != std::end(kKeptAttributes));
    }
    const auto i = p.find("/html[1]/body[1]/div[1]");
    REQUIRE(i);
    const auto& div = p.node(*i);
    CHECK(div.text == "Text & more here");
    CHECK(div.attrs.at("class") == "c");
    CHECK(div.attrs.at("id") == "i");
    CHECK(div.attrs.at("itemprop") == "director");
    CHECK(div.attrs.at("tag") == "div");
    CHECK_FALSE(div.attrs.contains("onclick"));
    CHECK(p.size() == 4);
  }

  // Expected trees were produced by html5lib on the same fragments.
  TEST_CASE("tag soup recovery matches the reference parser") {
    SUBCASE("unclosed li") {
      const Page p = page_of("<ul><li>one<li>two<li>three</ul>");
      CHECK(text_at(p, "/html[1]/body[1]/ul[1]/li[1]") == "one");
      CHECK(text_at(p, "/html[1]/body[1]/ul[1]/li[2]") == "two");
      CHECK(text_at(p, "/html[1]/body[1]/ul[1]/li[3]") == "three");
    }
    SUBCASE("implied tbody and cell ends") {
      const Page p = page_of("<table><tr><td>a<td>b<tr><td>c</table>");
      CHECK(text_at(p, "/html[1]/body[1]/table[1]/tbody[1]/tr[1]/td[1]") == "a");
      CHECK(text_at(p, "/html[1]/body[1]/table[1]/tbody[1]/tr[1]/td[2]") == "b");
      CHECK(text_at(p, "/html[1]/body[1]/table[1]/tbody[1]/tr[2]/td[1]") == "c");
    }
    SUBCASE("block closes paragraph") {
      const Page p = page_of("<p>para<div>block</div><p>x<p>y");
      CHECK(text_at(p, "/html[1]/body[1]/p[1]") == "para");
      CHECK(text_at(p, "/html[1]/body[1]/div[1]") == "block");
      CHECK(text_at(p, "/html[1]/body[1]/p[2]") == "x");
      CHECK(text_at(p, "/html[1]/body[1]/p[3]") == "y");
    }
    SUBCASE("definition lists") {
      const Page p = page_of("<dl><dt>Director:<dd>Spike Lee<dt>Writer:<dd>Spike Lee</dl>");
      CHECK(text_at(p, "/html[1]/body[1]/dl[1]/dt[1]") == "Director:");
      CHECK(text_at(p, "/html[1]/body[1]/dl[1]/dd[1]") == "Spike Lee");
      CHECK(text_at(p, "/html[1]/body[1]/dl[1]/dt[2]") == "Writer:");
      CHECK(text_at(p, "/html[1]/body[1]/dl[1]/dd[2]") == "Spike Lee");
    }
    SUBCASE("nested lists") {
      const Page p = page_of("<ul><li>a<ul><li>b<li>c</ul><li>d</ul>");
      CHECK(text_at(p, "/html[1]/body[1]/ul[1]/li[1]") == "a");
      CHECK(text_at(p, "/html[1]/body[1]/ul[1]/li[1]/ul[1]/li[1]") == "b");
      CHECK(text_at(p, "/html[1]/body[1]/ul[1]/li[1]/ul[1]/li[2]") == "c");
      CHECK(text_at(p, "/html[1]/body[1]/ul[1]/li[2]") == "d");
    }
  }

  TEST_CASE("page invariants") {
    const auto corpus = generate_corpus(SynthSpec{.n_pages = 5, .recommendation_blocks = true});
    for (const Page& p : corpus.parse_pages()) {
      std::set<std::string> seen;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& n = p.node(i);
        CHECK(seen.insert(n.path).second);
        CHECK(n.tag == n.xpath.back().tag);
        CHECK(n.attrs.at("tag") == n.tag);
        if (i > 0) {
          CHECK(p.find(n.xpath.parent()).has_value());
          CHECK(p.contains(static_cast<std::size_t>(n.parent), i));
        }
      }
    }
  }

  TEST_CASE("parsing is deterministic") {
    const auto corpus = generate_corpus(SynthSpec{.n_pages = 3});
    for (const auto& [id, html] : corpus.pages) {
      const Page a = parse_page(html, id), b = parse_page(html, id);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.node(i).path == b.node(i).path);
        CHECK(a.node(i).text == b.node(i).text);
        CHECK(a.node(i).attrs == b.node(i).attrs);
      }
    }
  }

  TEST_CASE("xpath serialization round trip") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 500; ++i) {
      const XPath x = random_path(rng);
      CHECK(XPath::parse(x.str()) == x);
    }
    CHECK(XPath::parse("/html[1]/body[1]/div[2]").str() == "/html[1]/body[1]/div[2]");
    CHECK_THROWS_AS(XPath::parse("html/body"), XPathError);
    CHECK_THROWS_AS(XPath::parse("/div[0]"), XPathError);
  }

  TEST_CASE("xpath_distance examples") {
    const auto a = XPath::parse("/html[1]/body[1]/div[2]/ul[1]/li[3]");
    CHECK(xpath_distance(a, a) == 0);
    // Same length, two steps differ only by index.
    const auto fig_a = XPath::parse("/html[1]/body[1]/div[2]/div[3]/ul[1]/li[1]/a[1]");
    const auto fig_b = XPath::parse("/html[1]/body[1]/div[2]/div[3]/ul[1]/li[4]/a[2]");
    CHECK(xpath_distance(fig_a, fig_b) == 2);
    CHECK(xpath_distance(XPath::parse("/a[1]/b[1]"), XPath::parse("/a[1]")) == 1);
  }

  TEST_CASE("xpath_distance is a bounded metric") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 500; ++i) {
      const XPath a = random_path(rng), b = random_path(rng), c = random_path(rng);
      const auto ab = xpath_distance(a, b);
      CHECK(ab == xpath_distance(b, a));
      CHECK((ab == 0) == (a == b));
      CHECK(xpath_distance(a, c) <= ab + xpath_distance(b, c));
      CHECK(ab <= std::max(a.size(), b.size()));
    }
  }

  TEST_CASE("template clustering") {
    SUBCASE("one synthetic template") {
      const auto pages = generate_corpus(SynthSpec{.n_pages = 10, .recommendation_blocks = true,
                                                   .missing_field_rate = 0.2, .index_shift_rate = 0.5})
                             .parse_pages();
      const auto clusters = cluster_templates(pages, 0.6);
      CHECK(clusters.size() == 1);
      CHECK(clusters[0].size() == 10);
    }
    SUBCASE("two disjoint templates") {
      auto pages = generate_corpus(SynthSpec{.n_pages = 5}).parse_pages();
      for (int i = 0; i < 5; ++i) pages.push_back(parse_page(person_page(i), "person-" + std::to_string(i)));
      const auto clusters = cluster_templates(pages, 0.6);
      REQUIRE(clusters.size() == 2);
      CHECK(clusters[0] == std::vector<std::size_t>{0, 1, 2, 3, 4});
      CHECK(clusters[1] == std::vector<std::size_t>{5, 6, 7, 8, 9});
    }
    SUBCASE("single page") {
      const std::vector<Page> one{page_of("<p>x</p>")};
      CHECK(cluster_templates(one, 0.6) == std::vector<std::vector<std::size_t>>{{0}});
    }
  }

  TEST_CASE("template clustering is a partition and serial equals parallel") {
    auto pages = generate_corpus(SynthSpec{.n_pages = 12, .duplicated_values = true}).parse_pages();
    for (int i = 0; i < 6; ++i) pages.push_back(parse_page(person_page(i), "person-" + std::to_string(i)));
    for (double t : {0.2, 0.6, 0.9, 1.0}) {
      const auto par = cluster_templates(pages, t, Exec::Parallel);
      CHECK(par == cluster_templates(pages, t, Exec::Serial));
      std::vector<int> hits(pages.size());
      for (const auto& c : par)
        for (auto p : c) ++hits[p];
      CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
    CHECK(shape_similarity_matrix(pages, Exec::Serial) == shape_similarity_matrix(pages, Exec::Parallel));
  }
}

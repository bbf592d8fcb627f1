#include "dsx/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dsx/records.hpp"
#include "dsx/text.hpp"

namespace dsx {
namespace {

using json = nlohmann::json;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::size_t below(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do v = gen_();
    while (v >= limit);
    return static_cast<std::size_t>(v % n);
  }
  int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::size_t>(hi - lo + 1))); }
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 gen_;
};

constexpr std::array kFirstNames = {
    "Ada",    "Bruno",  "Carla",  "Dmitri", "Elena",  "Farid",  "Greta",  "Hugo",   "Ines",   "Jonas",
    "Keiko",  "Lars",   "Mira",   "Nadia",  "Omar",   "Petra",  "Quinn",  "Rosa",   "Stefan", "Tamsin",
    "Ulrich", "Vera",   "Walter", "Xenia",  "Yusuf",  "Zora",   "Anton",  "Bianca", "Cyril",  "Delia",
    "Emil",   "Fiona",  "Gideon", "Hanna",  "Ivo",    "Jana",   "Kurt",   "Lena",   "Milo",   "Nora",
    "Oskar",  "Paula",  "Rafael", "Sonja",  "Tobias", "Ursula", "Viktor", "Wanda",  "Yara",   "Zeno"};

constexpr std::array kLastNames = {
    "Abernathy", "Bergstrom", "Castellano", "Dragomir", "Eastwick",  "Falkenrath", "Gallagher", "Halvorsen",
    "Ivanova",   "Jablonski", "Kowalczyk",  "Lindqvist", "Marchetti", "Nakamura",   "Oyelaran",  "Pellegrini",
    "Quiroga",   "Rasmussen", "Santangelo", "Thornbury", "Umarova",   "Vasquez",    "Whitcombe", "Yamashita",
    "Zielinski", "Achterberg", "Bellweather", "Cardoso",  "Delacroix", "Eriksen",    "Fontaine",  "Grimaldi",
    "Hargreave", "Ishikawa",  "Janssen",    "Kettering", "Lombardi",  "Moreau",     "Novak",     "Ortega"};

constexpr std::array kAdjectives = {
    "Silent",  "Crimson", "Hollow",  "Distant", "Broken", "Golden",  "Hidden",  "Last",    "Midnight", "Northern",
    "Quiet",   "Restless", "Scarlet", "Shallow", "Sunken", "Tender",  "Velvet",  "Wild",    "Winter",   "Burning",
    "Electric", "Fading",  "Frozen",  "Gentle",  "Lonely", "Paper",   "Painted", "Salt",    "Stolen",   "Bitter"};

constexpr std::array kNouns = {
    "Harbor",  "Orchard", "Mirror", "Season", "Garden",  "Frontier", "Lantern", "Meadow", "River",  "Signal",
    "Tide",    "Valley",  "Archive", "Bridge", "Canyon", "Ember",    "Falcon",  "Horizon", "Island", "Journey",
    "Kingdom", "Letter",  "Machine", "Night",  "Ocean",  "Promise",  "Railway", "Shadow",  "Summer", "Voyage"};

struct GenreDef {
  const char* name;
  int weight;
};
constexpr std::array<GenreDef, 10> kGenres = {{{"Drama", 40},
                                               {"Comedy", 14},
                                               {"Thriller", 10},
                                               {"Romance", 8},
                                               {"Action", 7},
                                               {"Horror", 6},
                                               {"Documentary", 5},
                                               {"Animation", 4},
                                               {"Western", 3},
                                               {"Musical", 3}}};
constexpr std::size_t kBrowseGenres = 4;

constexpr std::array kNavItems = {"Home",   "Movies",  "TV Shows",  "People",   "Top Rated", "Coming Soon",
                                  "Box Office", "News", "Awards",    "Festivals", "Lists",    "Trailers",
                                  "Help",   "Sign in", "Register",  "Community", "Contact", "About us"};

constexpr std::array kWords = {"a",       "the",     "young",   "old",      "city",    "family",  "secret", "war",
                               "love",    "finds",   "returns", "discovers", "must",   "home",    "after",  "years",
                               "stranger", "small",  "town",    "journey",  "against", "time",    "friend", "lost",
                               "brother", "sister",  "village", "storm",    "truth",   "between", "two",    "worlds",
                               "memory",  "danger",  "night",   "escape",   "island",  "letter",  "past",   "future"};

constexpr std::array kFooterColumns = {"Company", "Support", "Community", "Legal"};
constexpr std::array kFooterLinks = {"Overview", "Careers", "Press", "Advertising", "Contact"};
constexpr std::string_view kKindNames[] = {"person", "genre", "year", "runtime"};

struct Fact {
  std::size_t movie;
  std::size_t predicate;
  ObjectRef object;
  std::string text;
};

struct Movie {
  EntityId id;
  std::string title;
  // values per predicate, aligned with spec.predicates
  std::vector<std::vector<ObjectRef>> values;
};

// Minimal element tree so gold xpaths come from the same structure that is
// serialized.
struct El {
  std::string tag;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;
  std::vector<El> children;
  int mark = -1;

  El& add(std::string t, std::vector<std::pair<std::string, std::string>> a = {}, std::string txt = {}) {
    children.push_back(El{std::move(t), std::move(a), std::move(txt), {}, -1});
    return children.back();
  }
};

std::string escape_html(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void serialize(const El& el, int depth, std::string& out) {
  out.append(static_cast<std::size_t>(depth) * 2, ' ');
  out += '<' + el.tag;
  for (const auto& [k, v] : el.attrs) out += ' ' + k + "=\"" + escape_html(v) + '"';
  out += '>';
  out += escape_html(el.text);
  if (!el.children.empty()) {
    out += '\n';
    for (const El& c : el.children) serialize(c, depth + 1, out);
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
  }
  out += "</" + el.tag + ">\n";
}

void collect_marks(const El& el, const XPath& path, std::map<int, XPath>& marks) {
  if (el.mark != -1) marks.emplace(el.mark, path);
  std::map<std::string, int> seen;
  for (const El& c : el.children) collect_marks(c, path.child(c.tag, ++seen[c.tag]), marks);
}

std::string numbered(std::string_view prefix, std::size_t n, std::size_t width, std::string_view suffix = {}) {
  std::string digits = std::to_string(n);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits + std::string(suffix);
}

std::string person_slug(const EntityId& id) { return "/person/" + id; }

class Generator {
 public:
  explicit Generator(const SynthSpec& spec) : spec_(spec), rng_(spec.seed) {}

  SynthCorpus run();

 private:
  std::string fresh_title(std::set<std::string>& used);
  std::vector<ObjectRef> sample_values(const PredicateSpec& p, const std::vector<ObjectRef>& first_person);
  ObjectRef sample_genre();
  void make_movie(Movie& m);
  void join_franchise(Movie& m, const Movie& first);
  bool shares_person(const Movie& a, const Movie& b) const;
  std::string text_of(const ObjectRef& o) const;
  std::string sentence();
  El render(std::size_t movie_pos, std::vector<Fact>& facts, std::vector<int>& fact_marks);

  const SynthSpec& spec_;
  Rng rng_;
  std::vector<Entity> persons_;
  std::vector<Entity> genres_;
  std::map<EntityId, std::string> names_;
  std::vector<Movie> movies_;  // site movies, one per page
  std::vector<std::size_t> franchise_;
};

std::string Generator::fresh_title(std::set<std::string>& used) {
  for (;;) {
    const std::string a = kAdjectives[rng_.below(kAdjectives.size())];
    const std::string n = kNouns[rng_.below(kNouns.size())];
    const std::string n2 = kNouns[rng_.below(kNouns.size())];
    std::string t;
    switch (rng_.below(3)) {
      case 0: t = "The " + a + " " + n; break;
      case 1: t = n + " of the " + a + " " + n2; break;
      default: t = a + " " + n + "s"; break;
    }
    if (used.insert(normalize_surface(t)).second) return t;
  }
}

ObjectRef Generator::sample_genre() {
  int total = 0;
  for (const auto& g : kGenres) total += g.weight;
  int r = static_cast<int>(rng_.below(static_cast<std::size_t>(total)));
  for (std::size_t i = 0; i < kGenres.size(); ++i) {
    if (r < kGenres[i].weight) return ObjectRef::entity(genres_[i].id);
    r -= kGenres[i].weight;
  }
  return ObjectRef::entity(genres_.back().id);
}

std::vector<ObjectRef> Generator::sample_values(const PredicateSpec& p, const std::vector<ObjectRef>& first_person) {
  const int want = p.multi ? rng_.between(p.min_values, p.max_values) : 1;
  std::vector<ObjectRef> out;
  auto push_unique = [&](ObjectRef o) {
    if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(std::move(o));
  };
  if (p.kind == ValueKind::Person && p.multi && !first_person.empty() && rng_.chance(0.15))
    push_unique(first_person.front());
  if (p.kind == ValueKind::Person && !p.multi && !first_person.empty() && rng_.chance(0.3))
    push_unique(first_person.front());
  for (int guard = 0; static_cast<int>(out.size()) < want && guard < 1000; ++guard) {
    switch (p.kind) {
      case ValueKind::Person:
        push_unique(ObjectRef::entity(persons_[rng_.below(persons_.size())].id));
        break;
      case ValueKind::Genre:
        push_unique(sample_genre());
        break;
      case ValueKind::Year:
        push_unique(ObjectRef::literal(std::to_string(rng_.between(1950, 2023))));
        break;
      case ValueKind::Runtime:
        push_unique(ObjectRef::literal(std::to_string(rng_.between(78, 189)) + " min"));
        break;
    }
  }
  // Multi-valued genres read better with the common ones first.
  if (p.kind == ValueKind::Genre) std::sort(out.begin(), out.end());
  return out;
}

void Generator::make_movie(Movie& m) {
  m.values.clear();
  std::vector<ObjectRef> first_person;
  for (const PredicateSpec& p : spec_.predicates) {
    m.values.push_back(sample_values(p, first_person));
    if (first_person.empty() && p.kind == ValueKind::Person && !p.multi) first_person = m.values.back();
  }
}

// Franchise entries keep the first film's leads at the top of the bill and
// often its director and main genre.
void Generator::join_franchise(Movie& m, const Movie& first) {
  bool first_single = true;
  for (std::size_t pi = 0; pi < spec_.predicates.size(); ++pi) {
    const PredicateSpec& p = spec_.predicates[pi];
    const auto& src = first.values[pi];
    auto& vals = m.values[pi];
    if (src.empty() || vals.empty()) continue;
    if (p.kind == ValueKind::Person && !p.multi) {
      if (first_single && rng_.chance(0.6)) vals = {src.front()};
      first_single = false;
    } else if (p.kind == ValueKind::Person && p.multi) {
      const std::size_t leads = std::min<std::size_t>({2, src.size(), vals.size()});
      for (std::size_t k = 0; k < leads; ++k) {
        auto dup = std::find(vals.begin(), vals.end(), src[k]);
        if (dup != vals.end()) std::iter_swap(dup, vals.begin() + static_cast<std::ptrdiff_t>(k));
        else vals[k] = src[k];
      }
    } else if (p.kind == ValueKind::Genre && p.multi) {
      if (std::find(vals.begin(), vals.end(), src.front()) == vals.end()) vals.front() = src.front();
      std::sort(vals.begin(), vals.end());
    }
  }
}

bool Generator::shares_person(const Movie& a, const Movie& b) const {
  for (std::size_t pi = 0; pi < spec_.predicates.size(); ++pi) {
    if (spec_.predicates[pi].kind != ValueKind::Person) continue;
    for (const ObjectRef& x : a.values[pi])
      for (std::size_t pj = 0; pj < spec_.predicates.size(); ++pj)
        if (spec_.predicates[pj].kind == ValueKind::Person &&
            std::find(b.values[pj].begin(), b.values[pj].end(), x) != b.values[pj].end())
          return true;
  }
  return false;
}

std::string Generator::sentence() {
  std::string out;
  for (int n = rng_.between(8, 20); n > 0; --n) {
    if (!out.empty()) out += ' ';
    out += kWords[rng_.below(kWords.size())];
  }
  out[0] = static_cast<char>(out[0] - 'a' + 'A');
  return out + '.';
}

std::string Generator::text_of(const ObjectRef& o) const {
  if (!o.is_entity()) return o.value;
  return names_.at(o.value);
}

El Generator::render(std::size_t pos, std::vector<Fact>& facts, std::vector<int>& fact_marks) {
  const Movie& m = movies_[pos];
  El html{"html", {}, {}, {}, -1};
  El& head = html.add("head");
  head.add("title", {}, m.title + " - Moviebase");
  El& body = html.add("body");

  El& nav = body.add("div", {{"id", "nav"}, {"class", "nav"}}).add("ul", {{"class", "menu"}});
  for (const char* item : kNavItems) nav.add("li").add("a", {{"class", "nav-link"}}, item);

  El& main = body.add("div", {{"id", "main"}});
  El& h1 = main.add("h1", {{"class", "title"}, {"itemprop", "name"}}, m.title);
  h1.mark = -2;  // topic anchor, tagged below

  auto add_fact = [&](El& el, std::size_t pi, const ObjectRef& o) {
    el.mark = static_cast<int>(facts.size());
    facts.push_back(Fact{pos, pi, o, text_of(o)});
    fact_marks.push_back(el.mark);
  };

  std::vector<bool> present(spec_.predicates.size());
  for (std::size_t pi = 0; pi < spec_.predicates.size(); ++pi)
    present[pi] = !m.values[pi].empty() && !rng_.chance(spec_.missing_field_rate);

  El& facts_block = main.add("div", {{"class", "facts"}});
  for (std::size_t pi = 0; pi < spec_.predicates.size(); ++pi) {
    const PredicateSpec& p = spec_.predicates[pi];
    if (p.multi || !present[pi]) continue;
    El& row = facts_block.add("div", {{"class", "row"}});
    row.add("span", {{"class", "label"}}, p.label);
    const ObjectRef& o = m.values[pi].front();
    El& value = o.is_entity() ? row.add("a", {{"class", "value"}, {"itemprop", p.name}, {"href", person_slug(o.value)}},
                                        text_of(o))
                              : row.add("span", {{"class", "value"}, {"itemprop", p.name}}, text_of(o));
    add_fact(value, pi, o);
  }

  bool shifted = false;
  for (std::size_t pi = 0; pi < spec_.predicates.size(); ++pi) {
    const PredicateSpec& p = spec_.predicates[pi];
    if (!p.multi || !present[pi]) continue;
    if (!shifted) {
      shifted = true;
      if (rng_.chance(spec_.index_shift_rate)) {
        const int extra = rng_.between(1, 2);
        for (int s = 0; s < extra; ++s) {
          El& sec = main.add("div", {{"class", "section extra"}});
          sec.add("h3", {}, s == 0 ? "Producers" : "Crew");
          El& ul = sec.add("ul", {{"class", "crew"}});
          const int n = rng_.between(1, 3);
          for (int k = 0; k < n; ++k) {
            const Entity& who = persons_[rng_.below(persons_.size())];
            bool clash = false;
            for (const auto& vals : m.values)
              clash = clash || std::find(vals.begin(), vals.end(), ObjectRef::entity(who.id)) != vals.end();
            if (clash) continue;
            ul.add("li").add("a", {{"href", person_slug(who.id)}}, who.canonical_name);
          }
        }
      }
    }
    El& sec = main.add("div", {{"class", "section"}});
    sec.add("h3", {}, p.label);
    El& ul = sec.add("ul", {{"class", p.name}});
    for (const ObjectRef& o : m.values[pi]) {
      El& li = ul.add("li");
      El& value = o.is_entity() ? li.add("a", {{"itemprop", p.name}}, text_of(o))
                                : li.add("span", {{"itemprop", p.name}}, text_of(o));
      add_fact(value, pi, o);
    }
  }

  El& synopsis = main.add("div", {{"class", "synopsis"}});
  synopsis.add("h3", {}, "Synopsis");
  for (int k = rng_.between(2, 5); k > 0; --k) synopsis.add("p", {}, sentence());
  El& reviews = main.add("div", {{"class", "reviews"}});
  reviews.add("h3", {}, "User reviews");
  for (int k = rng_.between(2, 8); k > 0; --k) {
    El& rv = reviews.add("div", {{"class", "review"}});
    rv.add("span", {{"class", "author"}}, std::string(kWords[rng_.below(kWords.size())]) + "_fan" + std::to_string(rng_.between(1, 999)));
    rv.add("span", {{"class", "rating"}}, std::to_string(rng_.between(1, 10)) + "/10");
    rv.add("p", {}, sentence());
  }

  if (movies_.size() > 1) {
    El& side = body.add("div", {{"class", "sidebar"}});
    side.add("h4", {}, "Trending now");
    El& ul = side.add("ul");
    for (int k = 0; k < 6; ++k) {
      const std::size_t other = rng_.below(movies_.size());
      if (other != pos) ul.add("li").add("a", {{"class", "trending"}}, movies_[other].title);
    }
  }

  if (spec_.recommendation_blocks && movies_.size() > 1) {
    El& recs = body.add("div", {{"class", "recs"}});
    recs.add("h3", {}, "More like this");
    // Same franchise first, then films that share people with this one.
    std::vector<std::size_t> related;
    std::set<std::size_t> picked;
    for (std::size_t other = 0; other < movies_.size() && picked.size() < 2; ++other)
      if (other != pos && franchise_[other] == franchise_[pos]) picked.insert(other);
    for (std::size_t other = 0; other < movies_.size(); ++other)
      if (other != pos && !picked.count(other) && shares_person(m, movies_[other])) related.push_back(other);
    while (!related.empty() && picked.size() < 2) {
      const std::size_t k = rng_.below(related.size());
      picked.insert(related[k]);
      related.erase(related.begin() + static_cast<std::ptrdiff_t>(k));
    }
    while (picked.size() < std::min<std::size_t>(2, movies_.size() - 1)) {
      const std::size_t other = rng_.below(movies_.size());
      if (other != pos) picked.insert(other);
    }
    for (std::size_t other : picked) {
      const Movie& om = movies_[other];
      El& rec = recs.add("div", {{"class", "rec"}});
      rec.add("a", {{"class", "rec-title"}}, om.title);
      bool person_shown = false;
      for (std::size_t pi = 0; pi < spec_.predicates.size(); ++pi) {
        const PredicateSpec& p = spec_.predicates[pi];
        if (om.values[pi].empty()) continue;
        if (p.kind == ValueKind::Genre) {
          for (std::size_t k = 0; k < std::min<std::size_t>(2, om.values[pi].size()); ++k)
            rec.add("span", {{"class", "rec-genre"}}, text_of(om.values[pi][k]));
        } else if (p.kind == ValueKind::Person && !p.multi && !person_shown) {
          person_shown = true;
          rec.add("span", {{"class", "rec-person"}}, text_of(om.values[pi].front()));
        } else if (p.kind == ValueKind::Person && p.multi) {
          for (std::size_t k = 0; k < std::min<std::size_t>(3, om.values[pi].size()); ++k)
            rec.add("span", {{"class", "rec-cast"}}, text_of(om.values[pi][k]));
        }
      }
    }
  }

  if (spec_.duplicated_values) {
    El& browse = body.add("div", {{"class", "browse"}});
    browse.add("h4", {}, "Browse genres");
    El& ul = browse.add("ul");
    for (std::size_t g = 0; g < kBrowseGenres; ++g) ul.add("li").add("a", {{"class", "genre-link"}}, genres_[g].canonical_name);
  }

  El& footer = body.add("div", {{"id", "footer"}});
  for (const char* col : kFooterColumns) {
    El& c = footer.add("div", {{"class", "col"}});
    c.add("h5", {}, col);
    El& ul = c.add("ul");
    for (const char* link : kFooterLinks) ul.add("li").add("a", {}, link);
  }
  footer.add("p", {}, "\xC2\xA9 2024 Moviebase");
  footer.add("p", {}, "Terms of use");
  return html;
}

SynthCorpus Generator::run() {
  SynthCorpus out;
  out.spec = spec_;
  const auto n = static_cast<std::size_t>(spec_.n_pages);

  // Person pool, with some homonyms that share a name but nothing else.
  const std::size_t n_persons = std::max<std::size_t>(60, n * 3);
  std::vector<std::string> full_names;
  for (const char* f : kFirstNames)
    for (const char* l : kLastNames) full_names.push_back(std::string(f) + " " + l);
  rng_.shuffle(full_names);
  std::vector<Entity> homonyms;
  for (std::size_t i = 0; i < n_persons; ++i) {
    const std::string& name = full_names[i % full_names.size()];
    const std::string id = numbered("p", i + 1, 5, "");
    persons_.push_back(Entity{id, name, {}});
    names_[id] = name;
    if (rng_.chance(0.05)) homonyms.push_back(Entity{std::string(id) + "h", name, {}});
  }
  for (std::size_t g = 0; g < kGenres.size(); ++g) {
    const std::string id = numbered("g", g + 1, 2, "");
    genres_.push_back(Entity{id, kGenres[g].name, {}});
    names_[id] = kGenres[g].name;
  }

  std::set<std::string> used_titles{"help"};
  movies_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = numbered("m", i + 1, 5, "");
    movies_[i].id = id;
    movies_[i].title = fresh_title(used_titles);
    names_[id] = movies_[i].title;
    make_movie(movies_[i]);
  }
  franchise_.assign(n, 0);
  for (std::size_t i = 0, group = 0; i < n; ++group) {
    const std::size_t size = rng_.chance(0.6) ? static_cast<std::size_t>(rng_.between(2, 4)) : 1;
    for (std::size_t k = 0; k < size && i < n; ++k, ++i) {
      franchise_[i] = group;
      if (k > 0) join_franchise(movies_[i], movies_[i - k]);
    }
  }

  // Render and gather facts.
  std::vector<Fact> facts;
  std::vector<XPath> fact_paths;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string pid = numbered("page-", i + 1, 5, ".html");
    std::vector<int> marks;
    El html = render(i, facts, marks);
    std::map<int, XPath> paths;
    collect_marks(html, XPath({{"html", 1}}), paths);
    fact_paths.resize(facts.size());
    for (int mk : marks) fact_paths[static_cast<std::size_t>(mk)] = paths.at(mk);
    std::string doc = "<!DOCTYPE html>\n";
    serialize(html, 0, doc);
    out.pages.emplace_back(pid, std::move(doc));
    out.gold_topics.push_back(TopicAssignment{pid, movies_[i].id, paths.at(-2), 1.0});
    out.gold_annotations.push_back(
        Annotation{pid, paths.at(-2), std::string(kNamePredicate), movies_[i].title, movies_[i].id});
  }
  out.rendered_facts = facts.size();

  // Exactly round(coverage * |facts|) of the rendered facts enter the KB.
  std::vector<std::size_t> order(facts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng_.shuffle(order);
  const auto keep = static_cast<std::size_t>(std::llround(spec_.kb_coverage * static_cast<double>(facts.size())));
  std::vector<bool> in_kb(facts.size());
  for (std::size_t k = 0; k < keep; ++k) in_kb[order[k]] = true;

  for (std::size_t f = 0; f < facts.size(); ++f) {
    const Fact& fact = facts[f];
    const Movie& m = movies_[fact.movie];
    const std::string& pid = out.pages[fact.movie].first;
    const std::string& pred = spec_.predicates[fact.predicate].name;
    out.gold_triples.push_back(ExtractedTriple{pid, m.title, pred, fact.text, 1.0, fact_paths[f]});
    if (!in_kb[f]) continue;
    out.kb_triples.push_back(Triple{m.id, pred, fact.object});
    std::optional<EntityId> ent;
    if (fact.object.is_entity()) ent = fact.object.value;
    out.gold_annotations.push_back(Annotation{pid, fact_paths[f], pred, fact.text, ent});
  }
  std::sort(out.gold_annotations.begin(), out.gold_annotations.end());

  // KB-only movies: other films by the same people, a few remakes sharing a
  // site title, and a film whose title collides with a navigation link.
  const std::size_t n_extra = std::max<std::size_t>(20, n / 2);
  std::vector<Entity> extra_movies;
  for (std::size_t i = 0; i < n_extra; ++i) {
    const std::string id = numbered("x", i + 1, 5, "");
    Movie xm;
    xm.id = id;
    xm.title = (rng_.chance(0.05) && n > 0) ? movies_[rng_.below(n)].title : fresh_title(used_titles);
    make_movie(xm);
    extra_movies.push_back(Entity{xm.id, xm.title, {}});
    for (std::size_t pi = 0; pi < spec_.predicates.size(); ++pi)
      for (const ObjectRef& o : xm.values[pi]) out.kb_triples.push_back(Triple{xm.id, spec_.predicates[pi].name, o});
  }
  extra_movies.push_back(Entity{"x-help", "Help", {}});
  for (std::size_t pi = 0; pi < spec_.predicates.size(); ++pi) {
    const PredicateSpec& p = spec_.predicates[pi];
    if (p.kind == ValueKind::Year && !p.multi) out.kb_triples.push_back(Triple{"x-help", p.name, ObjectRef::literal("1965")});
    if (p.kind == ValueKind::Person && !p.multi)
      out.kb_triples.push_back(Triple{"x-help", p.name, ObjectRef::entity(persons_[rng_.below(persons_.size())].id)});
  }
  for (const Entity& h : homonyms) {
    for (const PredicateSpec& p : spec_.predicates)
      if (p.kind == ValueKind::Year) out.kb_triples.push_back(Triple{h.id, "born", ObjectRef::literal(std::to_string(rng_.between(1930, 1995)))});
  }

  for (const Movie& m : movies_) out.entities.push_back(Entity{m.id, m.title, {}});
  out.entities.insert(out.entities.end(), extra_movies.begin(), extra_movies.end());
  out.entities.insert(out.entities.end(), persons_.begin(), persons_.end());
  out.entities.insert(out.entities.end(), homonyms.begin(), homonyms.end());
  out.entities.insert(out.entities.end(), genres_.begin(), genres_.end());
  return out;
}

}  // namespace

std::vector<PredicateSpec> default_movie_predicates() {
  return {
      {"director", "Director:", ValueKind::Person, false, 1, 1},
      {"writer", "Writer:", ValueKind::Person, false, 1, 1},
      {"release_year", "Released:", ValueKind::Year, false, 1, 1},
      {"runtime", "Runtime:", ValueKind::Runtime, false, 1, 1},
      {"genre", "Genres", ValueKind::Genre, true, 1, 3},
      {"cast", "Cast", ValueKind::Person, true, 3, 8},
  };
}

void SynthSpec::validate() const {
  auto fraction = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw SpecError(std::string(what) + " must lie in [0, 1]");
  };
  if (n_pages < 1) throw SpecError("n_pages must be at least 1");
  if (predicates.empty()) throw SpecError("at least one predicate is required");
  fraction(kb_coverage, "kb_coverage");
  fraction(missing_field_rate, "missing_field_rate");
  fraction(index_shift_rate, "index_shift_rate");
  std::set<std::string> names;
  for (const PredicateSpec& p : predicates) {
    if (p.name.empty()) throw SpecError("predicate name must be nonempty");
    if (p.name == kNamePredicate || p.name == "OTHER") throw SpecError("predicate name '" + p.name + "' is reserved");
    if (!names.insert(p.name).second) throw SpecError("duplicate predicate '" + p.name + "'");
    if (p.min_values < 1 || p.max_values < p.min_values)
      throw SpecError("predicate '" + p.name + "' needs 1 <= min_values <= max_values");
    if (!p.multi && p.max_values != 1) throw SpecError("single-valued predicate '" + p.name + "' must have max_values 1");
    if (p.kind == ValueKind::Genre && p.max_values > static_cast<int>(kGenres.size()))
      throw SpecError("predicate '" + p.name + "' asks for more distinct genres than exist");
  }
}

json to_json(const SynthSpec& s) {
  json preds = json::array();
  for (const PredicateSpec& p : s.predicates) {
    preds.push_back({{"name", p.name},
                     {"label", p.label},
                     {"kind", kKindNames[static_cast<int>(p.kind)]},
                     {"multi", p.multi},
                     {"min_values", p.min_values},
                     {"max_values", p.max_values}});
  }
  return {{"n_pages", s.n_pages},
          {"predicates", preds},
          {"kb_coverage", s.kb_coverage},
          {"recommendation_blocks", s.recommendation_blocks},
          {"duplicated_values", s.duplicated_values},
          {"missing_field_rate", s.missing_field_rate},
          {"index_shift_rate", s.index_shift_rate},
          {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const json& j) {
  if (!j.is_object()) throw SpecError("spec must be a JSON object");
  SynthSpec s;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_pages") s.n_pages = v.get<int>();
      else if (key == "kb_coverage") s.kb_coverage = v.get<double>();
      else if (key == "recommendation_blocks") s.recommendation_blocks = v.get<bool>();
      else if (key == "duplicated_values") s.duplicated_values = v.get<bool>();
      else if (key == "missing_field_rate") s.missing_field_rate = v.get<double>();
      else if (key == "index_shift_rate") s.index_shift_rate = v.get<double>();
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else if (key == "predicates") {
        s.predicates.clear();
        for (const json& p : v) {
          PredicateSpec ps;
          ps.name = p.at("name").get<std::string>();
          ps.label = p.value("label", ps.name + ":");
          const auto kind = p.value("kind", std::string("person"));
          const auto* it = std::find(std::begin(kKindNames), std::end(kKindNames), kind);
          if (it == std::end(kKindNames)) throw SpecError("unknown value kind '" + kind + "'");
          ps.kind = static_cast<ValueKind>(it - std::begin(kKindNames));
          ps.multi = p.value("multi", false);
          ps.min_values = p.value("min_values", 1);
          ps.max_values = p.value("max_values", 1);
          s.predicates.push_back(std::move(ps));
        }
      } else {
        throw SpecError("unknown spec key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("bad spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthCorpus generate_corpus(const SynthSpec& spec) {
  spec.validate();
  return Generator(spec).run();
}

KnowledgeBase SynthCorpus::kb(MatchMode mode) const { return KnowledgeBase(entities, kb_triples, mode); }

std::vector<Page> SynthCorpus::parse_pages(Exec exec) const {
  std::vector<Page> out(pages.size());
  parallel_for(exec, pages.size(), [&](std::size_t i) { out[i] = parse_page(pages[i].second, pages[i].first); });
  return out;
}

void SynthCorpus::write(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "kb");
  fs::create_directories(dir / "pages");
  fs::create_directories(dir / "gold");
  {
    std::ostringstream ents, trips;
    kb().save(ents, trips);
    write_file(dir / "kb" / "entities.jsonl", ents.str());
    write_file(dir / "kb" / "triples.jsonl", trips.str());
  }
  for (const auto& [id, html] : pages) write_file(dir / "pages" / id, html);
  std::ostringstream t, a, g;
  write_extractions(t, gold_triples, true);
  write_annotations(a, gold_annotations, true);
  write_topics(g, gold_topics);
  write_file(dir / "gold" / "triples.jsonl", t.str());
  write_file(dir / "gold" / "annotations.jsonl", a.str());
  write_file(dir / "gold" / "topics.jsonl", g.str());
  json manifest = {{"spec", to_json(spec)},
                   {"pages", pages.size()},
                   {"entities", entities.size()},
                   {"kb_triples", kb_triples.size()},
                   {"rendered_facts", rendered_facts}};
  json files = {"kb/entities.jsonl", "kb/triples.jsonl", "gold/triples.jsonl", "gold/annotations.jsonl",
                "gold/topics.jsonl"};
  for (const auto& page : pages) files.push_back("pages/" + page.first);
  manifest["files"] = files;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace dsx

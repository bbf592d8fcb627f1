// Tag-soup HTML reader. Implements the parts of HTML5 tree construction that
// matter for detail pages: implied end tags for p/li/dd/dt/option/headings,
// table section and row insertion, void elements, raw-text skipping, and
// forgiving end-tag matching. head/body are never synthesized.
#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dsx/dom.hpp"
#include "dsx/text.hpp"

namespace dsx {

namespace {

using TagSet = std::unordered_set<std::string_view>;

const TagSet kVoid = {"area", "base", "br",   "col",   "embed",  "hr",    "img",
                      "input", "link", "meta", "param", "source", "track", "wbr"};

const TagSet kClosesP = {"address", "article", "aside",  "blockquote", "center",   "details",
                         "dialog",  "dir",     "div",    "dl",         "fieldset", "figcaption",
                         "figure",  "footer",  "header", "hgroup",     "main",     "menu",
                         "nav",     "ol",      "p",      "section",    "summary",  "ul",
                         "h1",      "h2",      "h3",     "h4",         "h5",       "h6",
                         "pre",     "listing", "form",   "table",      "hr",       "li",
                         "dd",      "dt",      "xmp"};

const TagSet kHeadings = {"h1", "h2", "h3", "h4", "h5", "h6"};

// HTML5 "special" elements minus address/div/p.
const TagSet kSpecial = {
    "applet",  "area",     "article", "aside",    "base",     "basefont", "bgsound", "blockquote",
    "body",    "br",       "button",  "caption",  "center",   "col",      "colgroup", "dd",
    "details", "dir",      "dl",      "dt",       "embed",    "fieldset", "figcaption", "figure",
    "footer",  "form",     "frame",   "frameset", "h1",       "h2",       "h3",      "h4",
    "h5",      "h6",       "head",    "header",   "hgroup",   "hr",       "html",    "iframe",
    "img",     "input",    "li",      "link",     "listing",  "main",     "marquee", "menu",
    "meta",    "nav",      "noembed", "noframes", "noscript", "object",   "ol",      "param",
    "plaintext", "pre",    "section", "select",   "source",   "style",    "summary", "table",
    "tbody",   "td",       "template", "textarea", "tfoot",   "th",       "thead",   "title",
    "tr",      "track",    "ul",      "wbr",      "xmp"};

const TagSet kButtonScope = {"applet", "caption", "html",     "table", "td",
                             "th",     "marquee", "object",   "template", "button"};
const TagSet kDefaultScope = {"applet", "caption", "html", "table", "td", "th", "marquee", "object", "template"};
const TagSet kListItemScope = {"applet", "caption", "html",     "table", "td",
                               "th",     "marquee", "object",   "template", "ol", "ul"};
const TagSet kTableScope = {"html", "table", "template"};
const TagSet kTableSections = {"tbody", "thead", "tfoot"};
const TagSet kFormatting = {"a",  "b",    "big",    "code", "em",     "font", "i",
                            "nobr", "s", "small", "strike", "strong", "tt",   "u", "span"};

struct Entity {
  std::string_view name;
  char32_t code;
};

constexpr std::array<Entity, 40> kEntities{{
    {"amp", '&'},      {"lt", '<'},        {"gt", '>'},        {"quot", '"'},
    {"apos", '\''},    {"nbsp", ' '},      {"copy", 0xA9},     {"reg", 0xAE},
    {"trade", 0x2122}, {"ndash", 0x2013},  {"mdash", 0x2014},  {"hellip", 0x2026},
    {"laquo", 0xAB},   {"raquo", 0xBB},    {"lsquo", 0x2018},  {"rsquo", 0x2019},
    {"ldquo", 0x201C}, {"rdquo", 0x201D},  {"middot", 0xB7},   {"bull", 0x2022},
    {"eacute", 0xE9},  {"egrave", 0xE8},   {"aacute", 0xE1},   {"agrave", 0xE0},
    {"oacute", 0xF3},  {"iacute", 0xED},   {"uacute", 0xFA},   {"ouml", 0xF6},
    {"uuml", 0xFC},    {"auml", 0xE4},     {"ccedil", 0xE7},   {"ntilde", 0xF1},
    {"times", 0xD7},   {"Eacute", 0xC9},   {"szlig", 0xDF},    {"deg", 0xB0},
    {"frac12", 0xBD},  {"euro", 0x20AC},   {"pound", 0xA3},    {"cent", 0xA2},
}};

void append_utf8(std::string& out, char32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Lossy UTF-8 validation: invalid sequences become U+FFFD.
std::string sanitize_utf8(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const auto c = static_cast<unsigned char>(in[i]);
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    int len = 0;
    char32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= in.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(in[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (ok) {
      const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
      ok = !overlong && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
    }
    if (ok) {
      out.append(in.substr(i, len));
      i += len;
    } else {
      append_utf8(out, 0xFFFD);
      ++i;
    }
  }
  return out;
}

std::string decode_entities(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] != '&') {
      out.push_back(in[i++]);
      continue;
    }
    const auto semi = in.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out.push_back(in[i++]);
      continue;
    }
    const std::string_view body = in.substr(i + 1, semi - i - 1);
    bool done = false;
    if (!body.empty() && body[0] == '#') {
      char32_t cp = 0;
      bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
      std::string_view digits = body.substr(hex ? 2 : 1);
      bool ok = !digits.empty();
      for (char d : digits) {
        int v;
        if (d >= '0' && d <= '9') v = d - '0';
        else if (hex && d >= 'a' && d <= 'f') v = d - 'a' + 10;
        else if (hex && d >= 'A' && d <= 'F') v = d - 'A' + 10;
        else { ok = false; break; }
        cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
        if (cp > 0x10FFFF) cp = 0x110000;
      }
      if (ok) {
        append_utf8(out, cp == 0xA0 ? U' ' : cp);
        done = true;
      }
    } else {
      for (const auto& e : kEntities) {
        if (e.name == body) {
          append_utf8(out, e.code);
          done = true;
          break;
        }
      }
    }
    if (done) {
      i = semi + 1;
    } else {
      out.push_back(in[i++]);
    }
  }
  return out;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool istarts_with(std::string_view hay, std::size_t pos, std::string_view needle) {
  if (pos + needle.size() > hay.size()) return false;
  for (std::size_t k = 0; k < needle.size(); ++k)
    if (std::tolower(static_cast<unsigned char>(hay[pos + k])) != needle[k]) return false;
  return true;
}

struct RawNode {
  std::string tag;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;
  int parent = -1;
  std::vector<int> children;
};

class TreeBuilder {
 public:
  void start_tag(std::string tag, std::vector<std::pair<std::string, std::string>> attrs) {
    if (tag == "html") {
      if (nodes_.empty()) open(std::move(tag), std::move(attrs));
      return;
    }
    ensure_root();
    if (tag == "head" || tag == "body") {
      if ((tag == "body" && seen_body_) || (tag == "head" && seen_head_)) return;
      (tag == "body" ? seen_body_ : seen_head_) = true;
      stack_.resize(1);
      open(std::move(tag), std::move(attrs));
      return;
    }

    if (kClosesP.contains(tag)) close_p_in_button_scope();
    if (tag == "li") {
      close_implied({"li"});
    } else if (tag == "dd" || tag == "dt") {
      close_implied({"dd", "dt"});
    } else if (kHeadings.contains(tag) && kHeadings.contains(current_tag())) {
      stack_.pop_back();
    } else if (tag == "option" && current_tag() == "option") {
      stack_.pop_back();
    } else if (tag == "a") {
      if (int a = find_open("a", kSpecial); a >= 0) stack_.resize(static_cast<std::size_t>(a));
    } else if (kTableSections.contains(tag)) {
      clear_to_table_context();
    } else if (tag == "tr") {
      clear_to_section_context();
      if (current_tag() == "table") open("tbody", {});
    } else if (tag == "td" || tag == "th") {
      clear_to_row_context();
      if (current_tag() == "table") open("tbody", {});
      if (kTableSections.contains(current_tag())) open("tr", {});
    }

    const bool is_void = kVoid.contains(tag);
    open(std::move(tag), std::move(attrs));
    if (is_void) stack_.pop_back();
  }

  void end_tag(const std::string& tag) {
    if (stack_.empty() || tag == "html" || tag == "body" || tag == "head") return;
    if (tag == "p") {
      close_p_in_button_scope();
      return;
    }
    const TagSet& boundary = tag == "li"                                                     ? kListItemScope
                             : kFormatting.contains(tag)                                   ? kTableScope
                             : kSpecial.contains(tag) || kClosesP.contains(tag) || tag == "div" ? kDefaultScope
                                                                                           : kSpecial;
    for (int k = static_cast<int>(stack_.size()) - 1; k >= 1; --k) {
      const std::string& t = nodes_[stack_[k]].tag;
      if (t == tag) {
        stack_.resize(static_cast<std::size_t>(k));
        return;
      }
      if (boundary.contains(t)) return;
    }
  }

  void text(std::string_view s) {
    if (nodes_.empty()) {
      if (s.find_first_not_of(" \t\r\n\f") == std::string_view::npos) return;
      ensure_root();
    }
    if (stack_.empty()) stack_.push_back(0);
    nodes_[stack_.back()].text.append(s);
  }

  std::vector<RawNode> finish() { return std::move(nodes_); }

 private:
  void ensure_root() {
    if (nodes_.empty()) open("html", {});
    if (stack_.empty()) stack_.push_back(0);
  }

  void open(std::string tag, std::vector<std::pair<std::string, std::string>> attrs) {
    RawNode n;
    n.tag = std::move(tag);
    n.attrs = std::move(attrs);
    n.parent = stack_.empty() ? -1 : stack_.back();
    const int id = static_cast<int>(nodes_.size());
    if (n.parent >= 0) nodes_[n.parent].children.push_back(id);
    nodes_.push_back(std::move(n));
    stack_.push_back(id);
  }

  const std::string& current_tag() const {
    static const std::string none;
    return stack_.empty() ? none : nodes_[stack_.back()].tag;
  }

  // Index into stack_ of the nearest open `tag`, stopping at any boundary tag.
  int find_open(std::string_view tag, const TagSet& boundary) const {
    for (int k = static_cast<int>(stack_.size()) - 1; k >= 1; --k) {
      const std::string& t = nodes_[stack_[k]].tag;
      if (t == tag) return k;
      if (boundary.contains(t)) return -1;
    }
    return -1;
  }

  void close_p_in_button_scope() {
    if (int p = find_open("p", kButtonScope); p >= 0) stack_.resize(static_cast<std::size_t>(p));
  }

  void close_implied(std::initializer_list<std::string_view> targets) {
    for (int k = static_cast<int>(stack_.size()) - 1; k >= 1; --k) {
      const std::string& t = nodes_[stack_[k]].tag;
      if (std::find(targets.begin(), targets.end(), t) != targets.end()) {
        stack_.resize(static_cast<std::size_t>(k));
        return;
      }
      if (kSpecial.contains(t)) return;
    }
  }

  void pop_until(const TagSet& stop) {
    for (int k = static_cast<int>(stack_.size()) - 1; k >= 1; --k) {
      if (stop.contains(nodes_[stack_[k]].tag)) {
        stack_.resize(static_cast<std::size_t>(k) + 1);
        return;
      }
    }
  }

  bool in_table() const { return find_open("table", {"html", "template"}) >= 0; }

  void clear_to_table_context() {
    if (in_table()) pop_until({"table", "template", "html"});
  }
  void clear_to_section_context() {
    if (in_table()) pop_until({"tbody", "thead", "tfoot", "table", "template", "html"});
  }
  void clear_to_row_context() {
    if (in_table()) pop_until({"tr", "tbody", "thead", "tfoot", "table", "template", "html"});
  }

  std::vector<RawNode> nodes_;
  std::vector<int> stack_;
  bool seen_body_ = false;
  bool seen_head_ = false;
};

void tokenize(std::string_view html, TreeBuilder& builder) {
  std::size_t i = 0;
  const std::size_t n = html.size();
  std::string pending_text;
  const auto flush_text = [&] {
    if (!pending_text.empty()) {
      builder.text(decode_entities(pending_text));
      pending_text.clear();
    }
  };

  while (i < n) {
    const char c = html[i];
    if (c != '<') {
      const auto next = html.find('<', i);
      const auto end = next == std::string_view::npos ? n : next;
      pending_text.append(html.substr(i, end - i));
      i = end;
      continue;
    }
    if (html.compare(i, 4, "<!--") == 0) {
      flush_text();
      const auto close = html.find("-->", i + 4);
      i = close == std::string_view::npos ? n : close + 3;
      continue;
    }
    if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?')) {
      flush_text();
      const auto close = html.find('>', i + 2);
      i = close == std::string_view::npos ? n : close + 1;
      continue;
    }
    const bool is_end = i + 1 < n && html[i + 1] == '/';
    const std::size_t name_start = i + (is_end ? 2 : 1);
    if (name_start >= n || !std::isalpha(static_cast<unsigned char>(html[name_start]))) {
      if (is_end) {
        // "</>" and "</ junk>" are dropped like a bogus comment.
        flush_text();
        const auto close = html.find('>', i + 2);
        i = close == std::string_view::npos ? n : close + 1;
      } else {
        pending_text.push_back('<');
        ++i;
      }
      continue;
    }
    flush_text();
    std::size_t p = name_start;
    while (p < n && is_name_char(html[p])) ++p;
    std::string tag = lower(html.substr(name_start, p - name_start));

    if (is_end) {
      const auto close = html.find('>', p);
      i = close == std::string_view::npos ? n : close + 1;
      builder.end_tag(tag);
      continue;
    }

    std::vector<std::pair<std::string, std::string>> attrs;
    while (p < n) {
      while (p < n && (std::isspace(static_cast<unsigned char>(html[p])) || html[p] == '/')) ++p;
      if (p >= n || html[p] == '>') break;
      std::size_t a = p;
      while (p < n && html[p] != '=' && html[p] != '>' && html[p] != '/' &&
             !std::isspace(static_cast<unsigned char>(html[p])))
        ++p;
      std::string name = lower(html.substr(a, p - a));
      while (p < n && std::isspace(static_cast<unsigned char>(html[p]))) ++p;
      std::string value;
      if (p < n && html[p] == '=') {
        ++p;
        while (p < n && std::isspace(static_cast<unsigned char>(html[p]))) ++p;
        if (p < n && (html[p] == '"' || html[p] == '\'')) {
          const char q = html[p++];
          const auto close = html.find(q, p);
          const auto end = close == std::string_view::npos ? n : close;
          value = std::string(html.substr(p, end - p));
          p = end == n ? n : end + 1;
        } else {
          std::size_t v = p;
          while (p < n && html[p] != '>' && !std::isspace(static_cast<unsigned char>(html[p]))) ++p;
          value = std::string(html.substr(v, p - v));
        }
      }
      if (!name.empty() && std::none_of(attrs.begin(), attrs.end(),
                                        [&](const auto& kv) { return kv.first == name; }))
        attrs.emplace_back(std::move(name), collapse_whitespace(decode_entities(value)));
    }
    i = p < n ? p + 1 : n;

    if (tag == "script" || tag == "style") {
      const std::string closing = "</" + tag;
      std::size_t k = i;
      while (k < n && !istarts_with(html, k, closing)) ++k;
      const auto close = html.find('>', k);
      i = (k >= n || close == std::string_view::npos) ? n : close + 1;
      continue;
    }
    const bool rcdata = tag == "title" || tag == "textarea";
    builder.start_tag(tag, std::move(attrs));
    if (rcdata) {
      const std::string closing = "</" + tag;
      std::size_t k = i;
      while (k < n && !istarts_with(html, k, closing)) ++k;
      builder.text(decode_entities(html.substr(i, k - i)));
      builder.end_tag(tag);
      const auto close = html.find('>', k);
      i = (k >= n || close == std::string_view::npos) ? n : close + 1;
    }
  }
  flush_text();
}

}  // namespace

Page parse_page(std::string_view html_bytes, std::string page_id) {
  const std::string html = sanitize_utf8(html_bytes);
  if (html.find_first_not_of(" \t\r\n\f") == std::string::npos) throw ParseError("empty document");

  TreeBuilder builder;
  tokenize(html, builder);
  std::vector<RawNode> raw = builder.finish();
  if (raw.empty()) throw ParseError("empty document");

  std::vector<DomNode> nodes(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    RawNode& r = raw[i];
    DomNode& d = nodes[i];
    d.tag = r.tag;
    d.parent = r.parent;
    d.children = r.children;
    d.text = collapse_whitespace(r.text);
    d.attrs["tag"] = r.tag;
    for (auto& [k, v] : r.attrs) {
      if (k == "tag") continue;
      if (std::find(std::begin(kKeptAttributes), std::end(kKeptAttributes), k) != std::end(kKeptAttributes) &&
          !v.empty())
        d.attrs[k] = v;
    }
  }
  // Creation order is document order, so parents precede children.
  nodes[0].xpath = XPath({{nodes[0].tag, 1}});
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::unordered_map<std::string, int> seen;
    int pos = 0;
    for (int c : nodes[i].children) {
      DomNode& child = nodes[static_cast<std::size_t>(c)];
      child.xpath = nodes[i].xpath.child(child.tag, ++seen[child.tag]);
      child.depth = nodes[i].depth + 1;
      child.sibling_pos = pos++;
    }
  }
  for (std::size_t i = nodes.size(); i-- > 0;) {
    DomNode& d = nodes[i];
    d.subtree_end = d.children.empty() ? static_cast<int>(i) + 1
                                       : nodes[static_cast<std::size_t>(d.children.back())].subtree_end;
  }
  return Page(std::move(page_id), std::move(nodes));
}

}  // namespace dsx

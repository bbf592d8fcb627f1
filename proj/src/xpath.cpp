#include "dsx/xpath.hpp"

#include <charconv>
#include <span>

#include "dsx/text.hpp"

namespace dsx {

XPath XPath::parse(std::string_view text) {
  std::vector<XPathStep> steps;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] != '/') throw XPathError("expected '/' in xpath: " + std::string(text));
    const auto open = text.find('[', pos);
    const auto close = text.find(']', pos);
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
      throw XPathError("missing index in xpath: " + std::string(text));
    XPathStep step;
    step.tag = std::string(text.substr(pos + 1, open - pos - 1));
    if (step.tag.empty() || step.tag.find('/') != std::string::npos)
      throw XPathError("bad step in xpath: " + std::string(text));
    const char* first = text.data() + open + 1;
    const char* last = text.data() + close;
    auto [ptr, ec] = std::from_chars(first, last, step.index);
    if (ec != std::errc() || ptr != last || step.index < 1)
      throw XPathError("bad index in xpath: " + std::string(text));
    steps.push_back(std::move(step));
    pos = close + 1;
  }
  return XPath(std::move(steps));
}

std::string XPath::str() const {
  std::string out;
  for (const auto& s : steps_) {
    out += '/';
    out += s.tag;
    out += '[';
    out += std::to_string(s.index);
    out += ']';
  }
  return out;
}

XPath XPath::parent() const {
  if (steps_.empty()) return {};
  return XPath(std::vector<XPathStep>(steps_.begin(), steps_.end() - 1));
}

XPath XPath::child(std::string tag, int index) const {
  auto steps = steps_;
  steps.push_back({std::move(tag), index});
  return XPath(std::move(steps));
}

bool XPath::is_prefix_of(const XPath& other) const {
  if (steps_.size() > other.steps_.size()) return false;
  for (std::size_t i = 0; i < steps_.size(); ++i)
    if (steps_[i] != other.steps_[i]) return false;
  return true;
}

std::string XPath::shape() const {
  std::string out;
  for (const auto& s : steps_) {
    out += '/';
    out += s.tag;
  }
  return out;
}

std::size_t xpath_distance(const XPath& a, const XPath& b) {
  return levenshtein(std::span<const XPathStep>(a.steps()), std::span<const XPathStep>(b.steps()));
}

}  // namespace dsx
